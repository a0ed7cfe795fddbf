//! Corpus construction: candidate filtering, pair formation, masking,
//! tokenization, vocabulary, profile encoding, splits, and the synthetic
//! generator.

pub mod dataset;
pub mod pairs;
pub mod profile;
pub mod raw;
pub mod synth;
pub mod tokenize;
pub mod vocab;

pub use dataset::{build_dataset, BuildAudit, BuildConfig, Dataset, ManifestEntry, ManifestKind};
pub use pairs::{count_splits, split_pairs, CouplePair, Split};
pub use profile::{encode_profile, TokenizedTweet, UserProfile};
pub use raw::{
    filter_candidate, form_pairs, has_heart, mask_profile, AffectionLexicon, FilterConfig,
    FilterOutcome, RawTweet, RejectReason,
};
pub use synth::{generate_synthetic, SynthSpec, SyntheticCorpus};
pub use tokenize::tokenize;
pub use vocab::{Vocabulary, PAD_ID, UNK_ID};
