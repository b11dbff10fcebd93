//! Exit codes and the one-line JSON error report.

use metriq::{ErrorClass, MetriqError};
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    Io,
    Validation,
    Feasibility,
    Numerical,
}

impl Class {
    pub fn exit_code(self) -> i32 {
        match self {
            Class::Io => 1,
            Class::Validation => 2,
            Class::Feasibility => 3,
            Class::Numerical => 4,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Class::Io => "io",
            Class::Validation => "validation",
            Class::Feasibility => "feasibility",
            Class::Numerical => "numerical",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CliError {
    pub class: Class,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            class: Class::Validation,
            kind: "invalid-argument",
            message: message.into(),
        }
    }

    pub fn io(e: impl std::fmt::Display) -> Self {
        Self {
            class: Class::Io,
            kind: "io",
            message: e.to_string(),
        }
    }

    pub fn to_json_line(&self) -> String {
        json!({
            "error": self.kind,
            "class": self.class.label(),
            "exit_code": self.class.exit_code(),
            "message": self.message,
        })
        .to_string()
    }
}

impl From<MetriqError> for CliError {
    fn from(e: MetriqError) -> Self {
        let class = match e.class() {
            ErrorClass::Validation => Class::Validation,
            ErrorClass::Feasibility => Class::Feasibility,
            ErrorClass::Numerical => Class::Numerical,
        };
        Self {
            class,
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

impl From<clap::Error> for CliError {
    fn from(e: clap::Error) -> Self {
        let text = e.to_string();
        let message = text
            .lines()
            .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect::<Vec<_>>()
            .join(" ");
        Self {
            class: Class::Validation,
            kind: "usage",
            message: message.trim_start_matches("error: ").to_string(),
        }
    }
}
