//! Session types with the temporal modalities next `()A`, always `[]A` and
//! eventually `<>A`.
//!
//! The crate parses `.tss` programs, grounds index-parameterized families,
//! instruments them with a cost model, reconstructs the temporal actions a
//! program needs to meet its declared types, checks the result, and runs it
//! on a timed multiset-rewriting interpreter.
//!
//! ```
//! use timed_sessions::{syntax, types::TypeEnv, subtyping};
//!
//! let sig = syntax::parse_program("type A").unwrap();
//! let env = TypeEnv::new(&sig).unwrap();
//! let a = syntax::parse_type_in(&sig, "[]A").unwrap();
//! let b = syntax::parse_type_in(&sig, "()[]A").unwrap();
//! assert!(subtyping::is_subtype(&env, &a, &b).unwrap());
//! ```

pub mod syntax;
pub mod types;
pub mod checker;
pub mod subtyping;
pub mod reconstruct;
pub mod cost;
pub mod runtime;
pub mod pipeline;
pub mod corpus;
pub mod oracle;
pub mod acceptance;
