//! Temporal weighted multidigraph toolkit for transaction networks.
//!
//! Transfers are kept as individual timestamped, weighted edges. Walks
//! follow non-decreasing timestamps with optional time and amount biases,
//! a skip-gram model turns walk corpora into node embeddings, and a
//! time-ordered link-prediction protocol scores the result.

pub mod cli;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod linkpred;
pub mod rng;
pub mod skipgram;
pub mod synth;
pub mod walk;

pub use error::Error;
pub use graph::{EdgeId, NodeId, StaticDigraph, TemporalEdge, Timestamp, Twmdg, TxRecord};
pub use linkpred::{run_pipeline, EvalReport, Method, PipelineConfig};
pub use skipgram::{train_embeddings, EmbeddingMatrix, SgnsParams};
pub use walk::{TemporalStrategy, TemporalWalk, WalkConfig, WalkCorpus, WeightStrategy};
