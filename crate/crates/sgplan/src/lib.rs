//! File formats, language-model bridge and benchmark harness around
//! `sgplan-core`.

pub mod bench;
pub mod clock;
pub mod fixtures;
pub mod io;
pub mod llm;

pub use clock::StdClock;
