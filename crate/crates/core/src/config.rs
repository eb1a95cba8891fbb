//! Flat `key = value` run manifests.
//!
//! Blank lines and lines starting with `#` are ignored. Every key has a
//! default, so a manifest only lists what it changes. Optional values use
//! `none`, generator-dependent values use `default`, and the detector
//! horizon uses `auto` to mean "the number of batches in the stream".

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use crate::stack::{MergeStatistic, StackConfig};
use crate::stream::{CsvOptions, GeneratorConfig, GeneratorKind, LabelColumn};
use crate::{Error, Result};

/// Where the samples come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Generator(GeneratorKind),
    Dataset(PathBuf),
}

/// Everything one run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: Source,
    pub label_column: String,
    pub normalize: bool,
    pub batch_size: usize,
    pub total_samples: usize,
    pub seed: u64,
    /// `None` keeps the generator's own default.
    pub noise_fraction: Option<f64>,
    /// `None` keeps the generator's own default.
    pub drift_schedule: Option<Vec<(usize, f64)>>,
    pub n_features: usize,
    pub minority_accept: Option<f64>,
    /// `None` means one time stamp per batch of the stream.
    pub total_timestamps_hint: Option<usize>,
    pub out: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub stack: StackConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            source: Source::Generator(GeneratorKind::Sea),
            label_column: "label".into(),
            normalize: true,
            batch_size: 500,
            total_samples: 50_000,
            seed: 1,
            noise_fraction: None,
            drift_schedule: None,
            n_features: 4,
            minority_accept: None,
            total_timestamps_hint: None,
            out: None,
            checkpoint: None,
            stack: StackConfig::default(),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e: T::Err| Error::config(key, format!("cannot parse `{value}`: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::config(key, format!("expected true or false, got `{value}`"))),
    }
}

fn parse_option<T: FromStr>(key: &str, value: &str, keyword: &str) -> Result<Option<T>>
where
    T::Err: Display,
{
    if value == keyword {
        Ok(None)
    } else {
        parse_value(key, value).map(Some)
    }
}

fn parse_schedule(key: &str, value: &str) -> Result<Vec<(usize, f64)>> {
    value
        .split(',')
        .map(|item| {
            let (idx, val) = item
                .split_once(':')
                .ok_or_else(|| Error::config(key, format!("expected index:value, got `{item}`")))?;
            Ok((parse_value(key, idx.trim())?, parse_value(key, val.trim())?))
        })
        .collect()
}

fn show_option<T: Display>(value: &Option<T>, keyword: &str) -> String {
    value
        .as_ref()
        .map_or_else(|| keyword.to_string(), ToString::to_string)
}

impl RunConfig {
    /// Parses a manifest on top of the defaults and validates the result.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        config.apply_manifest(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Applies the settings of a manifest without validating the result.
    pub fn apply_manifest(&mut self, text: &str) -> Result<()> {
        for (index, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    format!("line {}", index + 1),
                    format!("expected `key = value`, got `{line}`"),
                )
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "generator" => self.source = Source::Generator(value.parse()?),
            "dataset" => self.source = Source::Dataset(PathBuf::from(value)),
            "label_column" => self.label_column = value.to_string(),
            "normalize" => self.normalize = parse_bool(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "total_samples" => self.total_samples = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "noise_fraction" => self.noise_fraction = parse_option(key, value, "default")?,
            "drift_schedule" => {
                self.drift_schedule = if value == "default" {
                    None
                } else {
                    Some(parse_schedule(key, value)?)
                }
            }
            "n_features" => self.n_features = parse_value(key, value)?,
            "minority_accept" => self.minority_accept = parse_option(key, value, "none")?,
            "total_timestamps_hint" => self.total_timestamps_hint = parse_option(key, value, "auto")?,
            "out" => self.out = parse_option(key, value, "none")?,
            "checkpoint" => self.checkpoint = parse_option(key, value, "none")?,
            "step_size" => self.stack.step_size = parse_value(key, value)?,
            "feature_threshold" => self.stack.feature_threshold = parse_value(key, value)?,
            "merge_threshold" => self.stack.merge_threshold = parse_value(key, value)?,
            "merge_statistic" => self.stack.merge_statistic = value.parse::<MergeStatistic>()?,
            "layers_frozen" => self.stack.layers_frozen = parse_bool(key, value)?,
            "detector_window_batches" => self.stack.detector_window_batches = parse_value(key, value)?,
            "alpha_min_drift" => self.stack.drift.alpha_min_drift = parse_value(key, value)?,
            "alpha_min_warning" => self.stack.drift.alpha_min_warning = parse_value(key, value)?,
            "alpha_floor" => self.stack.drift.alpha_floor = parse_value(key, value)?,
            "vigilance" => self.stack.gclass.vigilance = parse_value(key, value)?,
            "prune_fraction" => self.stack.gclass.prune_fraction = parse_value(key, value)?,
            "weight_decay" => self.stack.gclass.weight_decay = parse_value(key, value)?,
            "rls_init_scale" => self.stack.gclass.rls_init_scale = parse_value(key, value)?,
            "conflict_threshold" => self.stack.gclass.conflict_threshold = parse_value(key, value)?,
            "density_band_low" => self.stack.gclass.density_band.0 = parse_value(key, value)?,
            "density_band_high" => self.stack.gclass.density_band.1 = parse_value(key, value)?,
            "forgetting_inflation" => self.stack.gclass.forgetting_inflation = parse_value(key, value)?,
            "dormancy_threshold" => self.stack.gclass.dormancy_threshold = parse_value(key, value)?,
            "max_volume_ratio" => self.stack.gclass.max_volume_ratio = parse_value(key, value)?,
            "firing_ema_rate" => self.stack.gclass.firing_ema_rate = parse_value(key, value)?,
            "forgetting_window" => self.stack.gclass.forgetting_window = parse_value(key, value)?,
            "density_window" => self.stack.gclass.density_window = parse_value(key, value)?,
            other => return Err(Error::config(other, "unknown key")),
        }
        Ok(())
    }

    /// Every key with its current value, in manifest order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let s = &self.stack;
        let g = &s.gclass;
        let mut out = Vec::new();
        match &self.source {
            Source::Generator(kind) => out.push(("generator", kind.to_string())),
            Source::Dataset(path) => out.push(("dataset", path.display().to_string())),
        }
        let schedule = self.drift_schedule.as_ref().map_or_else(
            || "default".to_string(),
            |sched| {
                sched
                    .iter()
                    .map(|(i, v)| format!("{i}:{v}"))
                    .collect::<Vec<_>>()
                    .join(",")
            },
        );
        out.extend([
            ("label_column", self.label_column.clone()),
            ("normalize", self.normalize.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("total_samples", self.total_samples.to_string()),
            ("seed", self.seed.to_string()),
            ("noise_fraction", show_option(&self.noise_fraction, "default")),
            ("drift_schedule", schedule),
            ("n_features", self.n_features.to_string()),
            ("minority_accept", show_option(&self.minority_accept, "none")),
            ("total_timestamps_hint", show_option(&self.total_timestamps_hint, "auto")),
            (
                "out",
                show_option(&self.out.as_ref().map(|p| p.display().to_string()), "none"),
            ),
            (
                "checkpoint",
                show_option(&self.checkpoint.as_ref().map(|p| p.display().to_string()), "none"),
            ),
            ("step_size", s.step_size.to_string()),
            ("feature_threshold", s.feature_threshold.to_string()),
            ("merge_threshold", s.merge_threshold.to_string()),
            ("merge_statistic", s.merge_statistic.to_string()),
            ("layers_frozen", s.layers_frozen.to_string()),
            ("detector_window_batches", s.detector_window_batches.to_string()),
            ("alpha_min_drift", s.drift.alpha_min_drift.to_string()),
            ("alpha_min_warning", s.drift.alpha_min_warning.to_string()),
            ("alpha_floor", s.drift.alpha_floor.to_string()),
            ("vigilance", g.vigilance.to_string()),
            ("prune_fraction", g.prune_fraction.to_string()),
            ("weight_decay", g.weight_decay.to_string()),
            ("rls_init_scale", g.rls_init_scale.to_string()),
            ("conflict_threshold", g.conflict_threshold.to_string()),
            ("density_band_low", g.density_band.0.to_string()),
            ("density_band_high", g.density_band.1.to_string()),
            ("forgetting_inflation", g.forgetting_inflation.to_string()),
            ("dormancy_threshold", g.dormancy_threshold.to_string()),
            ("max_volume_ratio", g.max_volume_ratio.to_string()),
            ("firing_ema_rate", g.firing_ema_rate.to_string()),
            ("forgetting_window", g.forgetting_window.to_string()),
            ("density_window", g.density_window.to_string()),
        ]);
        out
    }

    /// The manifest text; parsing it back yields the same configuration.
    pub fn serialize(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.entries()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }

    /// Re-checks every range constraint of the owning modules.
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be positive"));
        }
        if self.total_timestamps_hint == Some(0) {
            return Err(Error::config("total_timestamps_hint", "must be positive"));
        }
        self.stack_config(1).validate()?;
        if let Some(generator) = self.generator_config() {
            generator.validate()?;
        }
        Ok(())
    }

    /// Generator settings, or `None` for a CSV source.
    pub fn generator_config(&self) -> Option<GeneratorConfig> {
        let Source::Generator(kind) = self.source else {
            return None;
        };
        let mut g = GeneratorConfig::for_kind(kind, self.total_samples, self.batch_size, self.seed);
        if let Some(noise) = self.noise_fraction {
            g.noise_fraction = noise;
        }
        if let Some(schedule) = &self.drift_schedule {
            g.drift_schedule = schedule.clone();
        }
        if kind == GeneratorKind::Hyperplane {
            g.n_features = self.n_features;
        }
        g.minority_accept = self.minority_accept;
        Some(g)
    }

    pub fn csv_options(&self) -> CsvOptions {
        CsvOptions {
            label_column: LabelColumn::parse(&self.label_column),
            batch_size: self.batch_size,
            normalize: self.normalize,
        }
    }

    /// Stack settings for a stream of `batches` batches.
    pub fn stack_config(&self, batches: usize) -> StackConfig {
        let mut stack = self.stack.clone();
        stack.drift.total_timestamps_hint = self.total_timestamps_hint.unwrap_or(batches.max(1));
        stack
    }
}
