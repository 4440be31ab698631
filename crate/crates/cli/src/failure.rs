//! Command failures and their exit codes.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Bad flags, unreadable or malformed inputs. Exit 2.
    Input,
    /// Verdicts and annotations cannot be scored together. Exit 3.
    Eval,
    /// Model transport failure or exhausted token budget. Exit 4.
    Remote,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(kind: Kind, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            kind,
            error: error.into(),
        }
    }

    pub fn input(msg: impl fmt::Display) -> Self {
        Failure::new(Kind::Input, anyhow::anyhow!("{msg}"))
    }

    pub fn code(&self) -> u8 {
        match self.kind {
            Kind::Input => 2,
            Kind::Eval => 3,
            Kind::Remote => 4,
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

pub trait OrFail<T> {
    fn input(self) -> CmdResult<T>;
    fn eval(self) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> OrFail<T> for Result<T, E> {
    fn input(self) -> CmdResult<T> {
        self.map_err(|e| Failure::new(Kind::Input, e))
    }

    fn eval(self) -> CmdResult<T> {
        self.map_err(|e| Failure::new(Kind::Eval, e))
    }
}
