//! Provenance header embedded in every output file.

use sha2::{Digest, Sha256};

/// Settings that determine a command's output, in a fixed order.
#[derive(Clone, Debug)]
pub struct Header {
    pub command: &'static str,
    pub settings: Vec<(String, String)>,
    pub policy: Option<String>,
    pub constants: Vec<(String, String)>,
}

impl Header {
    pub fn new(command: &'static str) -> Self {
        Header {
            command,
            settings: Vec::new(),
            policy: None,
            constants: Vec::new(),
        }
    }

    pub fn set(mut self, key: &str, value: impl ToString) -> Self {
        self.settings.push((key.to_string(), value.to_string()));
        self
    }

    pub fn constant(mut self, key: &str, value: impl ToString) -> Self {
        self.constants.push((key.to_string(), value.to_string()));
        self
    }

    pub fn policy(mut self, policy: String) -> Self {
        self.policy = Some(policy);
        self
    }

    fn canonical(&self) -> String {
        let mut s = format!("command={}\n", self.command);
        for (k, v) in &self.settings {
            s.push_str(&format!("{k}={v}\n"));
        }
        if let Some(p) = &self.policy {
            s.push_str(&format!("policy={p}\n"));
        }
        for (k, v) in &self.constants {
            s.push_str(&format!("constant.{k}={v}\n"));
        }
        s
    }

    /// Hex SHA-256 of the canonical settings.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `# `-prefixed comment lines for CSV files.
    pub fn comment_lines(&self) -> String {
        let mut s = format!("# vpt {} {}\n", env!("CARGO_PKG_VERSION"), self.command);
        s.push_str(&format!("# config-sha256: {}\n", self.hash()));
        for (k, v) in &self.settings {
            s.push_str(&format!("# set {k}={v}\n"));
        }
        if let Some(p) = &self.policy {
            s.push_str(&format!("# policy {p}\n"));
        }
        for (k, v) in &self.constants {
            s.push_str(&format!("# constant {k}={v}\n"));
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let pairs = |v: &[(String, String)]| {
            serde_json::Value::Object(
                v.iter()
                    .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                    .collect(),
            )
        };
        serde_json::json!({
            "tool": format!("vpt {}", env!("CARGO_PKG_VERSION")),
            "command": self.command,
            "config_sha256": self.hash(),
            "settings": pairs(&self.settings),
            "policy": self.policy,
            "constants": pairs(&self.constants),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_tracks_settings() {
        let a = Header::new("x").set("n", 1).constant("c", "0.5");
        let b = Header::new("x").set("n", 2).constant("c", "0.5");
        assert_eq!(a.hash(), a.clone().hash());
        assert_ne!(a.hash(), b.hash());
        assert!(a.comment_lines().lines().all(|l| l.starts_with("# ")));
    }
}
