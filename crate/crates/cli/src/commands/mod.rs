pub mod bilinear;
pub mod energy;
pub mod multipliers;
pub mod plan;
pub mod rescale;
pub mod simulate;

use std::path::Path;

pub struct Context<'a> {
    pub config: Option<&'a Path>,
    pub out: Option<&'a Path>,
}

/// `Err(Failed)` listing every failed check, or `Ok` when none failed.
pub fn verdict(failures: &[String]) -> Result<(), crate::CliError> {
    if failures.is_empty() {
        Ok(())
    } else {
        Err(crate::CliError::Failed(failures.join("; ")))
    }
}
