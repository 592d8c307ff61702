//! MSP v1 parameter checkpoints.
//!
//! ```text
//! MSP v1 agent=<kind> dim=<D> window=<W> seed=<seed> steps=<n>
//! <param name> <d0>x<d1>x...
//! <values, space separated>
//! ...
//! ```

use std::fs;
use std::path::Path;

use crate::agents::{AgentKind, AgentParams};
use crate::embeddings::{parse_reals, push_reals};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub fn to_msp_string(agent: &AgentParams) -> String {
    let mut out = format!(
        "MSP v1 agent={} dim={} window={} seed={} steps={}\n",
        agent.kind,
        agent.dim(),
        agent.window,
        agent.seed,
        agent.steps
    );
    for id in agent.store.ids() {
        let value = agent.store.value(id);
        let shape: Vec<String> = value.shape().iter().map(usize::to_string).collect();
        out.push_str(&format!("{} {}\n", agent.store.name(id), shape.join("x")));
        push_reals(&mut out, value.data());
        out.push('\n');
    }
    out
}

pub fn parse_msp(text: &str, source: &str) -> Result<AgentParams> {
    let err = |line: usize, msg: String| Error::Parse {
        path: source.to_string(),
        line,
        msg,
    };
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| err(1, "empty checkpoint".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 7 || fields[0] != "MSP" || fields[1] != "v1" {
        return Err(err(
            1,
            format!("expected `MSP v1 agent=.. dim=.. window=.. seed=.. steps=..`, got {header:?}"),
        ));
    }
    let field = |i: usize, key: &str| -> Result<&str> {
        fields[i]
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .ok_or_else(|| err(1, format!("expected `{key}=` in {:?}", fields[i])))
    };
    let number = |i: usize, key: &str| -> Result<u64> {
        field(i, key)?
            .parse()
            .map_err(|_| err(1, format!("`{key}` is not an integer")))
    };
    let kind: AgentKind = field(2, "agent")?
        .parse()
        .map_err(|e: Error| err(1, e.to_string()))?;
    let dim = number(3, "dim")? as usize;
    let window = number(4, "window")? as usize;
    let mut agent = AgentParams::zeros(kind, dim, window).map_err(|e| err(1, e.to_string()))?;
    agent.seed = number(5, "seed")?;
    agent.steps = number(6, "steps")?;

    let ids: Vec<_> = agent.store.ids().collect();
    let mut lineno = 1;
    for id in ids {
        let expected_name = agent.store.name(id).to_string();
        let expected_shape = agent.store.value(id).shape().to_vec();
        lineno += 1;
        let meta = lines
            .next()
            .ok_or_else(|| err(lineno, format!("missing parameter {expected_name}")))?;
        let (name, shape) = meta
            .split_once(' ')
            .ok_or_else(|| err(lineno, format!("bad parameter line {meta:?}")))?;
        if name != expected_name {
            return Err(err(
                lineno,
                format!("expected parameter {expected_name}, found {name}"),
            ));
        }
        let shape: Vec<usize> = shape
            .split('x')
            .map(|d| d.trim().parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(lineno, format!("bad shape {shape:?}")))?;
        if shape != expected_shape {
            return Err(err(
                lineno,
                format!("{name} has shape {shape:?}, expected {expected_shape:?}"),
            ));
        }
        lineno += 1;
        let values = lines
            .next()
            .ok_or_else(|| err(lineno, format!("missing values of {name}")))?;
        let data = parse_reals(values).map_err(|m| err(lineno, m))?;
        let tensor = Tensor::new(shape, data).map_err(|e| err(lineno, e.to_string()))?;
        *agent.store.value_mut(id) = tensor;
    }
    if let Some(extra) = lines.find(|l| !l.trim().is_empty()) {
        return Err(err(
            lineno + 1,
            format!("unexpected trailing content {extra:?}"),
        ));
    }
    Ok(agent)
}

pub fn save_checkpoint(agent: &AgentParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_msp_string(agent)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<AgentParams> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_msp(&text, &path.display().to_string())
}
