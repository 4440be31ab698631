//! Synthetic procedures from task DAGs, with injected mistakes.
//!
//! A task is a set of named steps with precedence edges `[i, j]` (step `i`
//! must happen before step `j`). Correct procedures are topological orders
//! of the task. Tasks of up to [`UNIFORM_LIMIT`] steps are sampled uniformly
//! over all topological orders by counting linear extensions over subsets.
//! Larger tasks use greedy sampling (a uniform pick among the currently
//! available steps), which favours orders that keep many steps available.
//!
//! Grammar files: `{"tasks":[{"task_id", "steps":[names], "edges":[[i,j]]}]}`.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{
    ActionId, ActionVocabulary, MistakeType, Procedure, StepRecord, VocabularyError,
};

pub const UNIFORM_LIMIT: usize = 16;
/// Frames per synthetic step; step `k` spans `[k*FRAMES_PER_STEP, (k+1)*FRAMES_PER_STEP - 1]`.
pub const FRAMES_PER_STEP: u64 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task_id: String,
    pub steps: Vec<String>,
    #[serde(default)]
    pub edges: Vec<(usize, usize)>,
}

impl TaskSpec {
    /// Steps that must happen in the given order.
    pub fn chain<S: AsRef<str>>(task_id: &str, steps: &[S]) -> Self {
        TaskSpec {
            task_id: task_id.to_string(),
            steps: steps.iter().map(|s| s.as_ref().to_string()).collect(),
            edges: (1..steps.len()).map(|j| (j - 1, j)).collect(),
        }
    }

    /// `a` before `b` and `c`, which both precede `d`.
    pub fn diamond<S: AsRef<str>>(task_id: &str, [a, b, c, d]: [S; 4]) -> Self {
        TaskSpec {
            task_id: task_id.to_string(),
            steps: [a, b, c, d]
                .iter()
                .map(|s| s.as_ref().to_string())
                .collect(),
            edges: vec![(0, 1), (0, 2), (1, 3), (2, 3)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GrammarFile {
    pub tasks: Vec<TaskSpec>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GrammarError {
    #[error("grammar has no tasks")]
    NoTasks,
    #[error("task {0:?} has no steps")]
    EmptyTask(String),
    #[error("task id {0:?} appears more than once")]
    DuplicateTask(String),
    #[error("task {task:?} lists step {step:?} twice")]
    DuplicateStep { task: String, step: String },
    #[error("task {task:?}: edge [{from}, {to}] refers to a missing step")]
    EdgeOutOfRange {
        task: String,
        from: usize,
        to: usize,
    },
    #[error("task {0:?} has a dependency cycle")]
    CyclicGrammar(String),
    #[error(transparent)]
    Vocabulary(#[from] VocabularyError),
    #[error("invalid grammar file: {0}")]
    Parse(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InjectError {
    #[error("no valid {kind} injection{}", position.map(|p| format!(" at position {p}")).unwrap_or_default())]
    NoValidInjection {
        kind: MistakeType,
        position: Option<usize>,
    },
    #[error("procedure task {0:?} is not in the grammar")]
    UnknownTask(String),
    #[error("procedure {0:?} is not a correct partial execution of its task")]
    NotCorrect(String),
}

/// One compiled task.
#[derive(Debug, Clone)]
pub struct TaskDag {
    task_id: String,
    actions: Vec<ActionId>,
    preds: Vec<Vec<usize>>,
    step_of: HashMap<ActionId, usize>,
    /// `ways[mask]` = number of ways to finish once the steps in `mask` are done.
    ways: Option<Vec<u128>>,
}

impl TaskDag {
    pub fn task_id(&self) -> &str {
        &self.task_id
    }

    pub fn actions(&self) -> &[ActionId] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Direct prerequisites of each step, by step position.
    pub fn prerequisites(&self) -> &[Vec<usize>] {
        &self.preds
    }

    fn available(&self, done: &[bool]) -> Vec<usize> {
        (0..self.len())
            .filter(|&v| !done[v] && self.preds[v].iter().all(|&u| done[u]))
            .collect()
    }

    /// Actions that may legally come next after the correct prefix `prefix`.
    pub fn valid_next(&self, prefix: &[ActionId]) -> Vec<ActionId> {
        let mut done = vec![false; self.len()];
        for a in prefix {
            if let Some(&s) = self.step_of.get(a) {
                done[s] = true;
            }
        }
        self.available(&done)
            .into_iter()
            .map(|s| self.actions[s])
            .collect()
    }

    /// Index of the first step that is foreign to the task, repeats a done
    /// step, or comes before one of its prerequisites.
    pub fn first_violation(&self, sequence: &[ActionId]) -> Option<usize> {
        let mut done = vec![false; self.len()];
        for (i, a) in sequence.iter().enumerate() {
            let Some(&s) = self.step_of.get(a) else {
                return Some(i);
            };
            if done[s] || !self.preds[s].iter().all(|&u| done[u]) {
                return Some(i);
            }
            done[s] = true;
        }
        None
    }

    fn count_extensions(preds: &[Vec<usize>]) -> Vec<u128> {
        let n = preds.len();
        let full = (1usize << n) - 1;
        let pred_mask: Vec<usize> = preds
            .iter()
            .map(|ps| ps.iter().fold(0, |m, &u| m | (1 << u)))
            .collect();
        let mut ways = vec![0u128; full + 1];
        ways[full] = 1;
        for mask in (0..full).rev() {
            let mut total = 0u128;
            for (v, &needs) in pred_mask.iter().enumerate() {
                let bit = 1 << v;
                if mask & bit == 0 && needs & mask == needs {
                    total += ways[mask | bit];
                }
            }
            ways[mask] = total;
        }
        ways
    }

    /// Number of topological orders, when tracked.
    pub fn linear_extensions(&self) -> Option<u128> {
        self.ways.as_ref().map(|w| w[0])
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<ActionId> {
        let n = self.len();
        let mut done = vec![false; n];
        let mut mask = 0usize;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let avail = self.available(&done);
            let pick = match &self.ways {
                Some(ways) => {
                    let mut r = rng.random_range(0..ways[mask]);
                    let mut chosen = avail[avail.len() - 1];
                    for &v in &avail {
                        let w = ways[mask | (1 << v)];
                        if r < w {
                            chosen = v;
                            break;
                        }
                        r -= w;
                    }
                    chosen
                }
                None => avail[rng.random_range(0..avail.len())],
            };
            done[pick] = true;
            if self.ways.is_some() {
                mask |= 1 << pick;
            }
            out.push(self.actions[pick]);
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticGrammar {
    tasks: Vec<TaskDag>,
    vocab: ActionVocabulary,
    seed: u64,
}

impl SyntheticGrammar {
    pub fn from_json(text: &str, seed: u64) -> Result<Self, GrammarError> {
        let file: GrammarFile =
            serde_json::from_str(text).map_err(|e| GrammarError::Parse(e.to_string()))?;
        Self::compile(&file, seed)
    }

    /// Validates the tasks and builds the shared vocabulary. Step names may
    /// recur across tasks and then map to the same action.
    pub fn compile(file: &GrammarFile, seed: u64) -> Result<Self, GrammarError> {
        if file.tasks.is_empty() {
            return Err(GrammarError::NoTasks);
        }
        let mut vocab = ActionVocabulary::empty();
        let mut task_ids = HashSet::new();
        let mut tasks = Vec::with_capacity(file.tasks.len());
        for spec in &file.tasks {
            if !task_ids.insert(spec.task_id.as_str()) {
                return Err(GrammarError::DuplicateTask(spec.task_id.clone()));
            }
            if spec.steps.is_empty() {
                return Err(GrammarError::EmptyTask(spec.task_id.clone()));
            }
            let mut actions = Vec::with_capacity(spec.steps.len());
            let mut step_of = HashMap::new();
            for (i, name) in spec.steps.iter().enumerate() {
                let a = vocab.intern(name)?;
                if step_of.insert(a, i).is_some() {
                    return Err(GrammarError::DuplicateStep {
                        task: spec.task_id.clone(),
                        step: name.clone(),
                    });
                }
                actions.push(a);
            }
            let n = actions.len();
            let mut preds = vec![Vec::new(); n];
            for &(from, to) in &spec.edges {
                if from >= n || to >= n {
                    return Err(GrammarError::EdgeOutOfRange {
                        task: spec.task_id.clone(),
                        from,
                        to,
                    });
                }
                if !preds[to].contains(&from) {
                    preds[to].push(from);
                }
            }
            if !is_acyclic(&preds) {
                return Err(GrammarError::CyclicGrammar(spec.task_id.clone()));
            }
            let ways = (n <= UNIFORM_LIMIT).then(|| TaskDag::count_extensions(&preds));
            tasks.push(TaskDag {
                task_id: spec.task_id.clone(),
                actions,
                preds,
                step_of,
                ways,
            });
        }
        Ok(SyntheticGrammar { tasks, vocab, seed })
    }

    pub fn tasks(&self) -> &[TaskDag] {
        &self.tasks
    }

    pub fn task(&self, task_id: &str) -> Option<&TaskDag> {
        self.tasks.iter().find(|t| t.task_id == task_id)
    }

    pub fn vocab(&self) -> &ActionVocabulary {
        &self.vocab
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

fn is_acyclic(preds: &[Vec<usize>]) -> bool {
    let n = preds.len();
    let mut indegree: Vec<usize> = preds.iter().map(Vec::len).collect();
    let mut succs = vec![Vec::new(); n];
    for (v, ps) in preds.iter().enumerate() {
        for &u in ps {
            succs[u].push(v);
        }
    }
    let mut queue: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut visited = 0;
    while let Some(u) = queue.pop() {
        visited += 1;
        for &v in &succs[u] {
            indegree[v] -= 1;
            if indegree[v] == 0 {
                queue.push(v);
            }
        }
    }
    visited == n
}

fn build_procedure(
    id: String,
    task_id: &str,
    actions: &[ActionId],
    mistake: Option<(usize, MistakeType)>,
) -> Procedure {
    let steps = actions
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let start = k as u64 * FRAMES_PER_STEP;
            let step = match mistake {
                Some((m, kind)) if m == k => StepRecord::mistake(k, a, kind),
                _ => StepRecord::correct(k, a),
            };
            step.with_frames(start, start + FRAMES_PER_STEP - 1)
        })
        .collect();
    Procedure {
        procedure_id: id,
        toy_or_task_id: task_id.to_string(),
        actor_id: "synthetic".to_string(),
        steps,
        confidence: None,
    }
}

/// Samples `n` correct procedures, cycling through the tasks in order.
/// Ids are `{id_prefix}{task_id}-{i:04}`.
pub fn sample_procedures<R: Rng + ?Sized>(
    grammar: &SyntheticGrammar,
    n: usize,
    rng: &mut R,
    id_prefix: &str,
) -> Vec<Procedure> {
    (0..n)
        .map(|i| {
            let task = &grammar.tasks[i % grammar.tasks.len()];
            let actions = task.sample(rng);
            build_procedure(
                format!("{id_prefix}{}-{i:04}", task.task_id),
                &task.task_id,
                &actions,
                None,
            )
        })
        .collect()
}

/// [`sample_procedures`] driven by the grammar's own seed.
pub fn generate_procedures(grammar: &SyntheticGrammar, n: usize) -> Vec<Procedure> {
    sample_procedures(grammar, n, &mut grammar.rng(), "")
}

struct Candidate {
    position: usize,
    actions: Vec<ActionId>,
    mistake_at: usize,
}

fn candidates(
    task: &TaskDag,
    vocab: &ActionVocabulary,
    seq: &[ActionId],
    kind: MistakeType,
) -> Vec<Candidate> {
    let mut out = Vec::new();
    let len = seq.len();
    match kind {
        MistakeType::WrongAction => {
            for p in 0..len {
                let valid = task.valid_next(&seq[..p]);
                for (x, _) in vocab.iter() {
                    if !valid.contains(&x) {
                        let mut actions = seq[..p].to_vec();
                        actions.push(x);
                        out.push(Candidate {
                            position: p,
                            actions,
                            mistake_at: p,
                        });
                    }
                }
            }
        }
        MistakeType::Repeat => {
            for p in 1..len {
                let mut actions = seq[..p].to_vec();
                actions.push(seq[p - 1]);
                out.push(Candidate {
                    position: p,
                    actions,
                    mistake_at: p,
                });
            }
        }
        MistakeType::Omit => {
            for p in 0..len {
                let mut rest = seq.to_vec();
                rest.remove(p);
                if let Some(m) = task.first_violation(&rest) {
                    rest.truncate(m + 1);
                    out.push(Candidate {
                        position: p,
                        actions: rest,
                        mistake_at: m,
                    });
                }
            }
        }
        MistakeType::Order => {
            for i in 0..len {
                for j in i + 1..len {
                    let mut swapped = seq.to_vec();
                    swapped.swap(i, j);
                    if let Some(m) = task.first_violation(&swapped) {
                        swapped.truncate(m + 1);
                        out.push(Candidate {
                            position: i,
                            actions: swapped,
                            mistake_at: m,
                        });
                    }
                }
            }
        }
        MistakeType::Correction => {}
    }
    out
}

/// Injects one mistake of `kind` into a correct procedure and trims it so
/// the mistake is the last step.
///
/// * `wrong_action`: step `position` becomes an action not valid there.
/// * `repeat`: step `position` repeats step `position - 1`.
/// * `omit`: step `position` is dropped; the mistake lands on the first
///   later step whose prerequisites are then unmet.
/// * `order`: step `position` swaps with a later step such that a
///   dependency is violated; the mistake lands on the first violating step.
///
/// With `position = None` a position is drawn at random among those whose
/// mistake lands after the first step (the first step is never anticipated).
/// `correction` cannot be injected.
pub fn inject_mistake<R: Rng + ?Sized>(
    procedure: &Procedure,
    grammar: &SyntheticGrammar,
    kind: MistakeType,
    position: Option<usize>,
    rng: &mut R,
) -> Result<Procedure, InjectError> {
    let task = grammar
        .task(&procedure.toy_or_task_id)
        .ok_or_else(|| InjectError::UnknownTask(procedure.toy_or_task_id.clone()))?;
    let seq = procedure.actions();
    if procedure.has_mistake() || task.first_violation(&seq).is_some() {
        return Err(InjectError::NotCorrect(procedure.procedure_id.clone()));
    }
    let pool: Vec<Candidate> = candidates(task, grammar.vocab(), &seq, kind)
        .into_iter()
        .filter(|c| match position {
            Some(p) => c.position == p,
            None => c.mistake_at >= 1,
        })
        .collect();
    if pool.is_empty() {
        return Err(InjectError::NoValidInjection { kind, position });
    }
    let c = &pool[rng.random_range(0..pool.len())];
    Ok(build_procedure(
        procedure.procedure_id.clone(),
        &procedure.toy_or_task_id,
        &c.actions,
        Some((c.mistake_at, kind)),
    ))
}
