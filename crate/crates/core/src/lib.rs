//! Matchings in hypergraphs that avoid a prescribed family of forbidden
//! sub-matchings ("configurations"), with block-design instances as the main
//! application: an approximate (n, q, r)-design of girth above g is exactly an
//! avoiding matching in the auxiliary hypergraph built by [`designs`].
//!
//! The pipeline is sparsify (destroy short configuration cycles), then
//! iterated random rounds ([`nibble`]) that grow a matching while the residual
//! instance stays regular enough, then a local-search finish on a bipartite
//! remainder. [`verify`] re-checks everything produced here with independent
//! implementations.
//!
//! All randomness is counter-based ([`rng`]): a master seed plus (round,
//! purpose, index) determines every coin, so runs are reproducible
//! byte-for-byte at any thread count.

pub mod combin;
pub mod config;
pub mod cycles;
pub mod designs;
pub mod hypergraph;
pub mod lifts;
pub mod finish;
pub mod nibble;
pub mod sparsify;
pub mod rng;
pub mod verify;

pub use config::{Avoidance, ConfigError, ConfigHypergraph, RawConfigs};
pub use cycles::{CycleKind, CycleWitness};
pub use designs::{
    BlockConfigDetector, BlockHost, ConfigDetector, DesignError, DesignInstance, ExplicitDetector,
    HostKind, Provenance, SearchLimits,
};
pub use lifts::{build_rainbow, lift_disjoint, lift_list, random_decrease, regularize, DisjointLift, EdgeColoring, ListAssignment, ListLift};
pub use hypergraph::{Bipartition, Hypergraph, HypergraphError, Matching};
pub use nibble::{
    bipartite_round, diagnostics, make_schedule, nibble_round, run_bipartite, run_nibble,
    DiagnosticsReport, FinisherOutcome, NibbleError, NibbleParams, NibbleSchedule, NibbleTrace,
    RoundOutcome, RoundStats, ScheduleMode, ScheduleOverrides, ScheduleSpec,
};
pub use finish::{
    default_budget, find_bad_event, finish_for_nibble, finish_matching, Assignment, BadEvent,
    FinishError, FinishFailure, FinishSuccess,
};
pub use sparsify::{sparsify, DeletionExtent, SparsifyError, SparsifyReport};
pub use verify::{VerificationReport, VerifyError};
