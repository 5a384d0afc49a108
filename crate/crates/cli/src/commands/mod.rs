pub mod bootstrap_cmd;
pub mod interpolate;
pub mod perplexity;
pub mod pipeline;
pub mod score;
pub mod select;
pub mod simulate;
pub mod stats;
pub mod train_lm;
