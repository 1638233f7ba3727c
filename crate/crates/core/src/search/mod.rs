//! Search episodes over a scene graph driven by any pair of scorers.

mod episode;
mod policy;
mod trace;

pub use episode::{action_limit, search_episode, Action, ActionKind, SearchTrace, ThresholdState, DEFAULT_T0};
pub use policy::{minimum_reveal_set, rank_normalize, OracleMode, Policy, PolicyEnv, PolicyKind, PolicyRuntime, Role};
pub use trace::{read_trace, replay_trace, trace_from_jsonl, trace_to_jsonl, verify_trace, write_trace, ReplayError};
