//! Library half of the `tuckerlite` command-line tool: tensor files,
//! command implementations and table/CSV output. The binary only parses
//! arguments and maps failures to exit codes.

pub mod commands;
pub mod failure;
pub mod io;
pub mod table;

pub use failure::Failure;
pub use io::{load_tensor, save_tensor, TensorFile};
