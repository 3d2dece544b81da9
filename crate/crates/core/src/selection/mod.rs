//! Mutual information, filter rankers, wrapper scoring, subset search and
//! the level-by-level recommendation loop.

mod filter;
pub mod mi;
mod recommend;
mod search;
mod wrapper;

pub use filter::{dependency, mrmr_rank, mrms_rank, Ranking};
pub use mi::{discretize, entropy, mutual_information, BinCount, Discretizer};
pub use recommend::{
    recommend, recommended_ids, select_for_level, FoldOutcome, FoldStages, Instrumentation, LevelReport,
    LevelSelection, RankedKey, Recommendation, RecommendationResult, Recommended, SelectionConfig, MAX_K,
    SCHEMA_VERSION,
};
pub use search::{choose_fe1, choose_fe2, search_subsets, subset_count, SearchOutcome, SubsetScore};
pub use wrapper::{best_report, score_with_specs, wrapper_score, FoldData, WrapperMemo, WrapperSettings};
