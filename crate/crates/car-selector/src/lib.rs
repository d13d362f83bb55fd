//! Supervised passage selection for curbing topic drift: a linear
//! mean-embedding selector and a bidirectional-LSTM attention selector,
//! plus their shared training loop and argmax passage selection.

pub mod attention;
pub mod encoder;
pub mod error;
pub mod linear;
pub mod select;
pub mod train;

pub use attention::AttentionSelector;
pub use encoder::SelectorVocab;
pub use error::SelectorError;
pub use linear::LinearSelector;
pub use select::{select_passage, Selector, SelectorKind};
pub use train::{
    selection_accuracy, train_in_place, train_selector, SelectionExample, SelectorDims,
    SelectorTrainConfig,
};
