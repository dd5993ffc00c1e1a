//! Versioned text checkpoints of model parameters.
//!
//! ```text
//! fedgame-model 1
//! architecture 32 128,64,32 2 2e-1
//! params 14626
//! <one value per line>
//! ```
//!
//! Values are written in shortest round-trip form, so loading is exact.

use std::fs;
use std::path::Path;

use fedgame_core::nn::{Architecture, ModelParams};

use crate::error::{Error, Result};
use crate::tables::write_file;

pub const MAGIC: &str = "fedgame-model";
pub const VERSION: u32 = 1;

pub fn checkpoint_text(params: &ModelParams) -> String {
    let arch = params.arch();
    let hidden: Vec<String> = arch.hidden_sizes.iter().map(|h| h.to_string()).collect();
    let mut out = format!(
        "{MAGIC} {VERSION}\narchitecture {} {} {} {:e}\nparams {}\n",
        arch.input_size,
        if hidden.is_empty() {
            "-".to_string()
        } else {
            hidden.join(",")
        },
        arch.output_size,
        arch.dropout_rate,
        params.len()
    );
    for v in params.values() {
        out.push_str(&format!("{v:e}\n"));
    }
    out
}

pub fn write_checkpoint(path: &Path, params: &ModelParams) -> Result<()> {
    write_file(path, checkpoint_text(params).as_bytes())
}

pub fn read_checkpoint(path: &Path) -> Result<ModelParams> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&text).map_err(|(line, msg)| Error::format(path, line, msg))
}

fn parse_checkpoint(text: &str) -> std::result::Result<ModelParams, (u64, String)> {
    let mut lines = text.lines().zip(1u64..);
    let mut next = |what: &str| lines.next().ok_or((0, format!("missing {what}")));

    let (magic, line) = next("header")?;
    let version = magic
        .strip_prefix(MAGIC)
        .and_then(|v| v.trim().parse::<u32>().ok())
        .ok_or((line, format!("not a {MAGIC} file")))?;
    if version != VERSION {
        return Err((line, format!("unsupported version {version}")));
    }

    let (arch_line, line) = next("architecture")?;
    let fields: Vec<&str> = arch_line.split_whitespace().collect();
    let bad_arch = || (line, format!("bad architecture line `{arch_line}`"));
    if fields.len() != 5 || fields[0] != "architecture" {
        return Err(bad_arch());
    }
    let input: usize = fields[1].parse().map_err(|_| bad_arch())?;
    let hidden = if fields[2] == "-" {
        Vec::new()
    } else {
        fields[2]
            .split(',')
            .map(|h| h.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad_arch())?
    };
    let output: usize = fields[3].parse().map_err(|_| bad_arch())?;
    let dropout: f64 = fields[4].parse().map_err(|_| bad_arch())?;
    let arch =
        Architecture::new(input, hidden, output, dropout).map_err(|e| (line, e.to_string()))?;

    let (count_line, line) = next("parameter count")?;
    let count: usize = count_line
        .strip_prefix("params ")
        .and_then(|c| c.trim().parse().ok())
        .ok_or((line, format!("bad parameter count `{count_line}`")))?;
    let mut values = Vec::with_capacity(count);
    for (raw, line) in lines {
        values.push(
            raw.trim()
                .parse::<f64>()
                .map_err(|_| (line, format!("bad value `{raw}`")))?,
        );
    }
    if values.len() != count {
        return Err((
            0,
            format!("expected {count} values, found {}", values.len()),
        ));
    }
    ModelParams::from_values(arch, values).map_err(|e| (0, e.to_string()))
}
