//! Pipeline configuration and its `key = value` text form.
//!
//! The same text form is used for config files and for the snapshot stored
//! in model files.

use std::fmt::Display;
use std::str::FromStr;

use crate::classifier::TrainConfig;
use crate::error::{Error, Result};
use crate::generator::{DecodeConfig, GeneratorConfig};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineConfig {
    pub classifier: TrainConfig,
    pub generator: GeneratorConfig,
    pub decode: DecodeConfig,
}

pub const KEYS: &[&str] = &[
    "seed",
    "classifier.epochs",
    "classifier.learning_rate",
    "classifier.dim",
    "classifier.hash_space",
    "classifier.min_count",
    "generator.embed_dim",
    "generator.hidden_dim",
    "generator.learning_rate",
    "generator.clip_norm",
    "generator.epochs",
    "generator.context_min_count",
    "generator.name_min_count",
    "generator.max_context",
    "decode.beam_width",
    "decode.max_len",
    "decode.length_penalty",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key}: invalid value {value:?}: {e}")))
}

impl PipelineConfig {
    /// Sets the seed of both trained phases.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.classifier.seed = seed;
        self.generator.seed = seed;
        self
    }

    pub fn seed(&self) -> u64 {
        self.classifier.seed
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (c, g, d) = (&mut self.classifier, &mut self.generator, &mut self.decode);
        match key {
            "seed" => {
                let seed = parse(key, value)?;
                c.seed = seed;
                g.seed = seed;
            }
            "classifier.epochs" => c.epochs = parse(key, value)?,
            "classifier.learning_rate" => c.learning_rate = parse(key, value)?,
            "classifier.dim" => c.dim = parse(key, value)?,
            "classifier.hash_space" => c.hash_space = parse(key, value)?,
            "classifier.min_count" => c.min_count = parse(key, value)?,
            "generator.embed_dim" => g.embed_dim = parse(key, value)?,
            "generator.hidden_dim" => g.hidden_dim = parse(key, value)?,
            "generator.learning_rate" => g.learning_rate = parse(key, value)?,
            "generator.clip_norm" => g.clip_norm = parse(key, value)?,
            "generator.epochs" => g.epochs = parse(key, value)?,
            "generator.context_min_count" => g.context_min_count = parse(key, value)?,
            "generator.name_min_count" => g.name_min_count = parse(key, value)?,
            "generator.max_context" => g.max_context = parse(key, value)?,
            "decode.beam_width" => d.beam_width = parse(key, value)?,
            "decode.max_len" => d.max_len = parse(key, value)?,
            "decode.length_penalty" => d.length_penalty = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let (c, g, d) = (&self.classifier, &self.generator, &self.decode);
        Some(match key {
            "seed" => c.seed.to_string(),
            "classifier.epochs" => c.epochs.to_string(),
            "classifier.learning_rate" => c.learning_rate.to_string(),
            "classifier.dim" => c.dim.to_string(),
            "classifier.hash_space" => c.hash_space.to_string(),
            "classifier.min_count" => c.min_count.to_string(),
            "generator.embed_dim" => g.embed_dim.to_string(),
            "generator.hidden_dim" => g.hidden_dim.to_string(),
            "generator.learning_rate" => g.learning_rate.to_string(),
            "generator.clip_norm" => g.clip_norm.to_string(),
            "generator.epochs" => g.epochs.to_string(),
            "generator.context_min_count" => g.context_min_count.to_string(),
            "generator.name_min_count" => g.name_min_count.to_string(),
            "generator.max_context" => g.max_context.to_string(),
            "decode.beam_width" => d.beam_width.to_string(),
            "decode.max_len" => d.max_len.to_string(),
            "decode.length_penalty" => d.length_penalty.to_string(),
            _ => return None,
        })
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = PipelineConfig::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// Every key in `KEYS` order. Floats print in shortest round-trip form.
    pub fn to_text(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k}={}\n", self.get(k).expect("known key")))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.classifier.seed != self.generator.seed {
            return Err(Error::Config("classifier and generator seeds differ".into()));
        }
        self.classifier.validate()?;
        self.generator.validate()?;
        let d = &self.decode;
        if d.beam_width < 1 || d.max_len < 1 {
            return Err(Error::Config("beam width and max length must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&d.length_penalty) {
            return Err(Error::Config("length penalty must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = PipelineConfig::default().with_seed(9);
        c.decode.length_penalty = 0.35;
        c.generator.learning_rate = 0.1 + 0.2;
        assert_eq!(PipelineConfig::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn every_key_is_settable() {
        let c = PipelineConfig::default();
        for k in KEYS {
            let mut d = PipelineConfig::default();
            d.set(k, &c.get(k).unwrap()).unwrap();
            assert_eq!(d, c);
        }
    }

    #[test]
    fn comments_and_errors() {
        let c = PipelineConfig::from_text("# x\n\n seed = 5 \ndecode.beam_width=3\n").unwrap();
        assert_eq!((c.seed(), c.generator.seed, c.decode.beam_width), (5, 5, 3));
        let e = PipelineConfig::from_text("seed = 1\nbogus = 2\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        assert!(PipelineConfig::from_text("seed 1").is_err());
        assert!(PipelineConfig::from_text("seed = x").is_err());
    }

    #[test]
    fn validation() {
        let mut c = PipelineConfig::default();
        assert!(c.validate().is_ok());
        c.decode.length_penalty = 1.5;
        assert!(c.validate().is_err());
    }
}
