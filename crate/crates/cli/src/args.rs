//! Parsing of grid, window and parameter arguments.

use anyhow::{anyhow, bail, Context, Result};
use kmsbound::{Beta, InteractionSpec, Window};

/// Values of one model parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub name: String,
    pub values: Vec<f64>,
}

impl Grid {
    /// `name=start:stop:step` (inclusive) or `name=v1,v2,...`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, rest) = s
            .split_once('=')
            .ok_or_else(|| anyhow!("grid `{s}`: expected `name=start:stop:step` or `name=v1,v2,...`"))?;
        let name = name.trim();
        if name.is_empty() {
            bail!("grid `{s}`: empty parameter name");
        }
        let values: Vec<f64> = if rest.contains(':') {
            let parts: Vec<f64> = rest
                .split(':')
                .map(|t| t.trim().parse::<f64>().with_context(|| format!("grid `{s}`: bad number `{t}`")))
                .collect::<Result<_>>()?;
            let [start, stop, step] = parts[..] else {
                bail!("grid `{s}`: range needs exactly `start:stop:step`");
            };
            if !(step > 0.0) || stop < start {
                bail!("grid `{s}`: need step > 0 and stop >= start");
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            // snap to the step's decimal precision so printed values stay short
            (0..=n).map(|k| snap(start + step * k as f64)).collect()
        } else {
            rest.split(',')
                .map(|t| t.trim().parse::<f64>().with_context(|| format!("grid `{s}`: bad number `{t}`")))
                .collect::<Result<_>>()?
        };
        if values.is_empty() {
            bail!("grid `{s}` is empty");
        }
        Ok(Self {
            name: name.to_string(),
            values,
        })
    }
}

fn snap(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Comma separated inverse temperatures; `inf` for ground states.
pub fn parse_betas(s: &str) -> Result<Vec<Beta>> {
    s.split(',')
        .map(|t| t.trim().parse::<Beta>().map_err(|e| anyhow!("beta `{t}`: {e}")))
        .collect()
}

/// `name=value`.
pub fn parse_param(s: &str) -> Result<(String, f64)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| anyhow!("parameter `{s}`: expected `name=value`"))?;
    let v = v.trim().parse::<f64>().with_context(|| format!("parameter `{s}`"))?;
    Ok((k.trim().to_string(), v))
}

/// Either a level `L` (the box of side `2L+1`) or, in one dimension, `a:b`.
pub fn parse_window(s: &str, dim: usize) -> Result<Window> {
    if let Some((a, b)) = s.split_once(':') {
        if dim != 1 {
            bail!("window `{s}`: `a:b` only applies to chains");
        }
        let a: i32 = a.trim().parse().with_context(|| format!("window `{s}`"))?;
        let b: i32 = b.trim().parse().with_context(|| format!("window `{s}`"))?;
        if b < a {
            bail!("window `{s}` is empty");
        }
        Ok(Window::interval(a, b))
    } else {
        let l: u32 = s.trim().parse().with_context(|| format!("window `{s}`"))?;
        Ok(Window::level(dim, l))
    }
}

/// A built-in name or the path of a model file.
pub fn load_model(s: &str) -> Result<InteractionSpec> {
    if let Some(spec) = kmsbound::models::builtin(s) {
        return Ok(spec);
    }
    InteractionSpec::from_file(s).with_context(|| format!("model `{s}`"))
}

pub fn with_params(spec: &InteractionSpec, params: &[(String, f64)]) -> Result<InteractionSpec> {
    let mut out = spec.clone();
    for (k, v) in params {
        out = out.with_param(k, *v).with_context(|| format!("parameter `{k}`"))?;
    }
    Ok(out)
}
