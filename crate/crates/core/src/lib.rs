pub mod category;
pub mod corpus;
pub mod eval;
pub mod geometry;
pub mod index;
pub mod lexicon;
pub mod llm;
pub mod pipeline;
pub mod query;
pub mod ranking;
pub mod retrieval;
pub mod synth;

pub use category::Category;
pub use corpus::{Corpus, Gazetteer, GazetteerEntry, Manifest, PoiInput, PoiRecord, QaPair};
pub use eval::{evaluate, Baseline, EvalReport, MetricReport, System};
pub use geometry::{Coord, Geometry, Length, LineString, Polygon};
pub use index::SpatialIndex;
pub use llm::Gateway;
pub use pipeline::{Engine, ParserMode, PipelineConfig, PipelineError, QueryInput, Trace, WeightPolicy};
pub use query::{QueryIntent, QueryKind, SpatialQuery};
pub use ranking::{ParetoPoint, TradeoffWeights};
pub use retrieval::{Embedder, FusionWeights, HashEmbedder, LexiconMasker, MaskingView};
