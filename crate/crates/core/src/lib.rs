//! Voice-commanded guide robot pipeline.
//!
//! Transcribed speech is gated on a configurable wake phrase, matched against
//! a word dictionary of named locations, and turned into navigation goals on a
//! topic bus. A simulated robot plans over multi-floor occupancy grids and
//! walks the route tick by tick, answering through a text-to-speech channel.

pub mod cloudadapters;
pub mod messages;
pub mod msgbus;
pub mod navcore;
pub mod simrobot;
pub mod speechflow;
