//! Flat `key = value` configuration. Values use TOML literal syntax.
//! Precedence, lowest first: built-in defaults, the config file, `key=value`
//! arguments, then the `--seed` flag.

use std::collections::BTreeMap;
use std::fmt;

use toml::Value;

use crate::CliError;

/// A subcommand's accepted keys with their default literals.
pub type Schema = &'static [(&'static str, &'static str)];

#[derive(Debug, Clone)]
pub struct Config {
    order: Vec<&'static str>,
    values: BTreeMap<&'static str, Value>,
}

fn parse_literal(raw: &str) -> Result<Value, String> {
    let table: toml::Table = toml::from_str(&format!("v = {raw}")).map_err(|e| e.message().to_string())?;
    Ok(table["v"].clone())
}

/// Keys defaulting to `"auto"` are filled in by the subcommand.
fn is_auto(v: &Value) -> bool {
    matches!(v, Value::String(s) if s == "auto")
}

impl Config {
    pub fn defaults(schema: Schema) -> Self {
        let mut values = BTreeMap::new();
        for &(k, lit) in schema {
            values.insert(k, parse_literal(lit).expect("default literals are valid TOML"));
        }
        Self { order: schema.iter().map(|(k, _)| *k).collect(), values }
    }

    fn set(&mut self, key: &str, value: Value, origin: &dyn Fn() -> String) -> Result<(), CliError> {
        let Some(&k) = self.order.iter().find(|k| **k == key) else {
            return Err(CliError::Config(format!("{}: unknown key `{key}`", origin())));
        };
        let old = &self.values[k];
        let compatible = is_auto(old) || matches!(
            (old, &value),
            (Value::Float(_), Value::Integer(_))
                | (Value::Float(_), Value::Float(_))
                | (Value::Integer(_), Value::Integer(_))
                | (Value::Boolean(_), Value::Boolean(_))
                | (Value::String(_), Value::String(_))
                | (Value::Array(_), Value::Array(_))
        );
        if !compatible {
            return Err(CliError::Config(format!(
                "{}: `{key}` expects a {}, got {}",
                origin(),
                old.type_str(),
                value.type_str()
            )));
        }
        let value = match (old, value) {
            (Value::Float(_), Value::Integer(i)) => Value::Float(i as f64),
            (_, v) => v,
        };
        self.values.insert(k, value);
        Ok(())
    }

    /// Applies a config file's text; errors carry `path:line`.
    pub fn apply_file(&mut self, path: &str, text: &str) -> Result<(), CliError> {
        for (i, line) in text.lines().enumerate() {
            let origin = || format!("{path}:{}", i + 1);
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, raw)) = body.split_once('=') else {
                return Err(CliError::Config(format!("{}: expected `key = value`", origin())));
            };
            let value = parse_literal(raw.trim()).map_err(|e| CliError::Config(format!("{}: {e}", origin())))?;
            self.set(key.trim(), value, &origin)?;
        }
        Ok(())
    }

    pub fn apply_override(&mut self, arg: &str) -> Result<(), CliError> {
        let origin = || format!("argument `{arg}`");
        let Some((key, raw)) = arg.split_once('=') else {
            return Err(CliError::Config(format!("{}: expected key=value", origin())));
        };
        let value = parse_literal(raw.trim()).map_err(|e| CliError::Config(format!("{}: {e}", origin())))?;
        self.set(key.trim(), value, &origin)
    }

    pub fn set_seed(&mut self, seed: u64) -> Result<(), CliError> {
        let v = i64::try_from(seed).map_err(|_| CliError::Config("--seed must fit in a signed 64-bit integer".into()))?;
        self.set("seed", Value::Integer(v), &|| "--seed".to_string())
    }

    /// Replaces an `"auto"` value by `value` so the echo shows what ran.
    pub fn resolve(&mut self, key: &str, value: Value) -> &Value {
        let k = *self.order.iter().find(|k| **k == key).unwrap_or_else(|| panic!("`{key}` is not in the schema"));
        if is_auto(&self.values[k]) {
            self.values.insert(k, value);
        }
        &self.values[k]
    }

    fn get(&self, key: &str) -> &Value {
        self.values.get(key).unwrap_or_else(|| panic!("`{key}` is not in the schema"))
    }

    fn bad(&self, key: &str, what: &str) -> CliError {
        CliError::Config(format!("`{key}` must be {what}, got {}", self.get(key)))
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        match self.get(key) {
            Value::Float(x) if x.is_finite() => Ok(*x),
            _ => Err(self.bad(key, "a finite number")),
        }
    }

    pub fn positive(&self, key: &str) -> Result<f64, CliError> {
        let x = self.f64(key)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(self.bad(key, "positive"))
        }
    }

    pub fn u64(&self, key: &str) -> Result<u64, CliError> {
        match self.get(key) {
            Value::Integer(i) if *i >= 0 => Ok(*i as u64),
            _ => Err(self.bad(key, "a non-negative integer")),
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        Ok(self.u64(key)? as usize)
    }

    pub fn string(&self, key: &str) -> Result<&str, CliError> {
        match self.get(key) {
            Value::String(s) => Ok(s),
            _ => Err(self.bad(key, "a string")),
        }
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let Value::Array(a) = self.get(key) else { return Err(self.bad(key, "an array of numbers")) };
        a.iter()
            .map(|v| match v {
                Value::Float(x) if x.is_finite() => Ok(*x),
                Value::Integer(i) => Ok(*i as f64),
                _ => Err(self.bad(key, "an array of numbers")),
            })
            .collect()
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>, CliError> {
        let Value::Array(a) = self.get(key) else { return Err(self.bad(key, "an array of integers")) };
        a.iter()
            .map(|v| match v {
                Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                _ => Err(self.bad(key, "an array of non-negative integers")),
            })
            .collect()
    }
}

impl fmt::Display for Config {
    /// One `# key = value` line per key, in schema order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in &self.order {
            writeln!(f, "# {k} = {}", self.values[k])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: Schema = &[("seed", "1"), ("eps", "0.5"), ("grid", "[0.3, 0.2]"), ("mode", "\"a\"")];

    #[test]
    fn file_then_override() {
        let mut c = Config::defaults(SCHEMA);
        c.apply_file("f.toml", "# comment\n\neps = 2   # trailing\ngrid = [1, 0.5, 0.25]\n").unwrap();
        assert_eq!(c.f64("eps").unwrap(), 2.0);
        c.apply_override("eps=0.125").unwrap();
        assert_eq!(c.f64("eps").unwrap(), 0.125);
        assert_eq!(c.f64_list("grid").unwrap(), vec![1.0, 0.5, 0.25]);
        c.set_seed(9).unwrap();
        assert_eq!(c.u64("seed").unwrap(), 9);
    }

    #[test]
    fn errors_name_the_line() {
        let mut c = Config::defaults(SCHEMA);
        let e = c.apply_file("f.toml", "eps = 1\nbogus = 2\n").unwrap_err();
        assert!(matches!(e, CliError::Config(ref m) if m.starts_with("f.toml:2") && m.contains("bogus")), "{e:?}");
        let e = c.apply_file("f.toml", "[table]\n").unwrap_err();
        assert!(matches!(e, CliError::Config(ref m) if m.starts_with("f.toml:1")));
        let e = c.apply_file("f.toml", "\n\nmode = 3\n").unwrap_err();
        assert!(matches!(e, CliError::Config(ref m) if m.starts_with("f.toml:3")));
        assert!(c.apply_override("seed=-1").is_ok());
        assert!(c.u64("seed").is_err());
    }

    #[test]
    fn auto_values_resolve_once() {
        let mut c = Config::defaults(&[("r", "\"auto\""), ("q", "\"auto\"")]);
        c.apply_override("q=2.5").unwrap();
        c.resolve("r", Value::Float(1.5));
        c.resolve("q", Value::Float(9.0));
        assert_eq!((c.f64("r").unwrap(), c.f64("q").unwrap()), (1.5, 2.5));
    }

    #[test]
    fn echo_is_in_schema_order() {
        let c = Config::defaults(SCHEMA);
        assert_eq!(c.to_string(), "# seed = 1\n# eps = 0.5\n# grid = [0.3, 0.2]\n# mode = \"a\"\n");
    }
}
