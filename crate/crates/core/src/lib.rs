//! IC3 safety model checking with triggered clause pushing.

pub mod aiger;
pub mod cli;
pub mod corpus;
pub mod encoder;
pub mod ic3;
pub mod logic;
pub mod oracle;
pub mod sat;
