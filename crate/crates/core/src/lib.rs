//! Deterministic robustness benchmarking for image-captioning models.
//!
//! The crate corrupts image-caption datasets with seeded, parameterised
//! degradations ([`corruptions`]), collects captions from files or HTTP
//! services ([`providers`]), cleans them ([`normalize`]) and scores them with
//! BLEU-1..4, METEOR, ROUGE-L, CIDEr ([`metrics`]) and embedding similarity
//! ([`similarity`]). [`harness::run`] drives the whole grid of datasets,
//! conditions, models and prompt tiers; [`report`] renders the results.
//!
//! ```
//! use capharness::metrics::{score_corpus, EvalPair};
//!
//! let pairs = vec![
//!     EvalPair::from_text("1", "a dog runs on grass", &["a dog runs on grass"]).unwrap(),
//!     EvalPair::from_text("2", "two kids play chess", &["two kids play chess"]).unwrap(),
//! ];
//! let scores = score_corpus(&pairs).unwrap();
//! assert_eq!(scores.bleu4, 1.0);
//! ```

pub mod corruptions;
pub mod datasets;
pub mod harness;
pub mod metrics;
pub mod normalize;
pub mod providers;
pub mod report;
pub mod rng;
pub mod similarity;
