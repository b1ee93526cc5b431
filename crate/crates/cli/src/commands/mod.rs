//! One module per subcommand.

pub mod ablate;
pub mod attention;
pub mod evaluate;
pub mod extract;
pub mod map_question;
pub mod pipeline;
pub mod structure;
pub mod synthesize;
pub mod train;
