use serde_json::{Map, Value};

use crate::kernel::{format::builtin_from_params, Kernel};

use super::Result;

pub const CORPUS_NAMES: [&str; 6] = ["shift", "harmonic", "outer_power", "uniform_family", "diag_n2", "delta"];

/// Named example kernels. Parameters: `shift` takes `f` as `[re, im]`
/// pairs, `outer_power` takes `alpha`, `uniform_family` takes `n`.
pub fn corpus(name: &str, params: &Map<String, Value>) -> Result<Kernel> {
    Ok(Kernel::builtin(builtin_from_params(name, params)?)?)
}
