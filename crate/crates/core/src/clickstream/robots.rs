//! Robot filtering by user agent substring and origin IP block.
//!
//! Policy file format, one entry per line:
//!
//! ```text
//! # comment
//! agent_pattern = googlebot
//! ip_block = 66.249.64.0/19
//! ```

use std::net::IpAddr;
use std::path::Path;

use ipnet::IpNet;

use super::LogRecord;

#[derive(Debug, thiserror::Error)]
pub enum PolicyError {
    #[error("reading robot policy {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("robot policy line {line}: invalid CIDR block {value:?}")]
    BadCidr { line: usize, value: String },
    #[error("robot policy line {line}: expected `agent_pattern = <text>` or `ip_block = <cidr>`, got {text:?}")]
    BadEntry { line: usize, text: String },
}

/// Patterns are matched case-insensitively as substrings of the user agent.
/// An empty policy filters nothing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RobotPolicy {
    agent_patterns: Vec<String>,
    ip_blocks: Vec<IpNet>,
}

impl RobotPolicy {
    pub fn new<S: AsRef<str>>(agent_patterns: &[S], ip_blocks: Vec<IpNet>) -> Self {
        Self {
            agent_patterns: agent_patterns
                .iter()
                .map(|p| p.as_ref().to_lowercase())
                .filter(|p| !p.is_empty())
                .collect(),
            ip_blocks,
        }
    }

    pub fn agent_patterns(&self) -> &[String] {
        &self.agent_patterns
    }

    pub fn ip_blocks(&self) -> &[IpNet] {
        &self.ip_blocks
    }

    pub fn is_empty(&self) -> bool {
        self.agent_patterns.is_empty() && self.ip_blocks.is_empty()
    }

    pub fn parse(text: &str) -> Result<Self, PolicyError> {
        let mut patterns = Vec::new();
        let mut blocks = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad_entry = || PolicyError::BadEntry { line: i + 1, text: raw.to_string() };
            let (key, value) = line.split_once('=').ok_or_else(bad_entry)?;
            let value = value.trim();
            match key.trim() {
                "agent_pattern" if !value.is_empty() => patterns.push(value.to_string()),
                "ip_block" => {
                    let net: IpNet = value
                        .parse()
                        .map_err(|_| PolicyError::BadCidr { line: i + 1, value: value.to_string() })?;
                    blocks.push(net);
                }
                _ => return Err(bad_entry()),
            }
        }
        Ok(Self::new(&patterns, blocks))
    }

    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| PolicyError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.agent_patterns {
            out.push_str(&format!("agent_pattern = {p}\n"));
        }
        for b in &self.ip_blocks {
            out.push_str(&format!("ip_block = {b}\n"));
        }
        out
    }

    pub fn matches_agent(&self, user_agent: &str) -> bool {
        if self.agent_patterns.is_empty() {
            return false;
        }
        let agent = user_agent.to_lowercase();
        self.agent_patterns.iter().any(|p| agent.contains(p.as_str()))
    }

    pub fn matches_ip(&self, ip: &IpAddr) -> bool {
        self.ip_blocks.iter().any(|net| net.contains(ip))
    }
}

pub fn is_robot(record: &LogRecord, policy: &RobotPolicy) -> bool {
    policy.matches_agent(&record.user_agent) || policy.matches_ip(&record.ip)
}
