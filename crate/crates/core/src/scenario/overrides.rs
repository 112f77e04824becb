use serde_json::{Map, Value};

use super::RunError;

/// Applies `a.b.c=value` to a JSON tree. The value is parsed as JSON when
/// possible and taken as a string otherwise; missing objects are created.
/// Numeric segments index into arrays.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<(), RunError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| RunError::Config(format!("override {spec:?} is not key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(RunError::Config(format!("override {spec:?} has an empty path segment")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = root;
    for (k, part) in parts.iter().enumerate() {
        let last = k + 1 == parts.len();
        if cur.is_null() {
            *cur = Value::Object(Map::new());
        }
        cur = match cur {
            Value::Object(m) => {
                if last {
                    m.insert(part.to_string(), value);
                    return Ok(());
                }
                m.entry(part.to_string()).or_insert(Value::Null)
            }
            Value::Array(a) => {
                let i: usize = part
                    .parse()
                    .map_err(|_| RunError::Config(format!("override {key}: {part:?} indexes an array")))?;
                let len = a.len();
                let slot = a
                    .get_mut(i)
                    .ok_or_else(|| RunError::Config(format!("override {key}: index {i} past length {len}")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => {
                return Err(RunError::Config(format!("override {key}: {part:?} descends into a scalar")));
            }
        };
    }
    unreachable!("loop returns on the last segment")
}
