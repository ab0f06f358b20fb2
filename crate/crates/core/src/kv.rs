//! Flat `key = value` text files with `#` comments.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse(text: &str, path: &Path) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(path, idx + 1, format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::parse(path, idx + 1, "empty key"));
        }
        out.push(Entry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line: idx + 1,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines() {
        let text = "# header\n\nalpha = 1 # trailing\n beta=two\n";
        let entries = parse(text, Path::new("x")).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].key, "alpha");
        assert_eq!(entries[0].value, "1");
        assert_eq!(entries[1].value, "two");
        assert_eq!(entries[1].line, 4);
    }

    #[test]
    fn missing_equals_names_line() {
        let err = parse("a = 1\nbogus\n", Path::new("cfg")).unwrap_err();
        assert!(err.to_string().starts_with("cfg:2"), "{err}");
    }
}
