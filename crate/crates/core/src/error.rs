use thiserror::Error;

use crate::wdg::TaskId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("workflow graph contains a cycle through {0}")]
    CyclicGraph(TaskId),
    #[error("malformed workflow graph: {0}")]
    MalformedGraph(String),
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },
    #[error("structured workflow is empty")]
    EmptyStructure,
    #[error("invalid structured workflow: {0}")]
    InvalidStructure(String),
    #[error("unknown task {0}")]
    UnknownTask(TaskId),
    #[error("duplicate task id {0}")]
    DuplicateTask(TaskId),
    #[error("decision vector has no entry for {0}")]
    IncompleteDecision(TaskId),
    #[error("local-only task {0} cannot be offloaded")]
    LocalOnlyOffloaded(TaskId),
    #[error("no finite path between the requested nodes")]
    Unreachable,
    #[error("sub-branch minimum for block {0} is not available")]
    SubBranchUnsolved(usize),
    #[error("cannot parse input: {0}")]
    Parse(String),
    #[error("{offloadable} offloadable tasks exceed the exhaustive-search limit of {limit}")]
    TooLarge { offloadable: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field: field.to_string(),
        reason: reason.into(),
    }
}
