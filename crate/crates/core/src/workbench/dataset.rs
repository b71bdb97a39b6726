//! Labeled datasets: on-disk manifests, seeded synthetic generation and
//! stratified splitting.
//!
//! All randomness comes from ChaCha8 (`rand_chacha`) seeded with a `u64`;
//! normal deviates use `rand_distr::StandardNormal`.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::tbin::{read_tbin, write_tbin};
use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub samples: Vec<DenseTensor>,
    /// Indices into `class_names`.
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub split: Option<SplitTag>,
}

impl LabeledDataset {
    pub fn new(samples: Vec<DenseTensor>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if samples.len() != labels.len() {
            return Err(Error::dims(format!(
                "{} samples, {} labels",
                samples.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::InvalidConfig(format!(
                "label {bad} has no class name ({} classes)",
                class_names.len()
            )));
        }
        if let Some(first) = samples.first() {
            if samples.iter().any(|s| s.dims() != first.dims()) {
                return Err(Error::dims("dataset samples must share dims"));
            }
        }
        Ok(Self {
            samples,
            labels,
            class_names,
            split: None,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dims(&self) -> Option<&[usize]> {
        self.samples.first().map(DenseTensor::dims)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_names.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    fn subset(&self, idx: &[usize], split: SplitTag) -> Self {
        Self {
            samples: idx.iter().map(|&i| self.samples[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            split: Some(split),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub class_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub class_names: Vec<String>,
    pub samples: Vec<ManifestEntry>,
}

/// Writes `dir/manifest.json` plus one TBIN per sample under `dir/samples/`.
pub fn write_dataset(ds: &LabeledDataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let sample_dir = dir.join("samples");
    fs::create_dir_all(&sample_dir).map_err(|e| Error::io(&sample_dir, e))?;
    let mut entries = Vec::with_capacity(ds.len());
    for (i, (x, &l)) in ds.samples.iter().zip(&ds.labels).enumerate() {
        let rel = format!("samples/{i:05}.tbin");
        write_tbin(x, dir.join(&rel))?;
        entries.push(ManifestEntry {
            path: rel,
            class_index: l,
        });
    }
    let manifest = Manifest {
        class_names: ds.class_names.clone(),
        samples: entries,
    };
    let path = dir.join(MANIFEST);
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
}

/// Reads a dataset from a manifest file or a directory containing one.
/// Sample paths are resolved relative to the manifest's directory.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let manifest_path: PathBuf = if path.is_dir() {
        path.join(MANIFEST)
    } else {
        path.to_path_buf()
    };
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut samples = Vec::with_capacity(manifest.samples.len());
    let mut labels = Vec::with_capacity(manifest.samples.len());
    for e in &manifest.samples {
        samples.push(read_tbin(base.join(&e.path))?);
        labels.push(e.class_index);
    }
    LabeledDataset::new(samples, labels, manifest.class_names)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub per_class: usize,
    pub dims: [usize; 3],
    pub signal_rank: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            classes: 3,
            per_class: 20,
            dims: [16, 16, 4],
            signal_rank: 2,
            noise_sigma: 1.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.per_class == 0 || self.signal_rank == 0 || self.dims.contains(&0) {
            return Err(Error::InvalidConfig(
                "synthetic classes, per_class, signal_rank and dims must be at least 1".into(),
            ));
        }
        if self.noise_sigma.is_nan() || self.noise_sigma < 0.0 {
            return Err(Error::InvalidConfig("noise_sigma must be non-negative".into()));
        }
        Ok(())
    }
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Per-class mean tensors: each is a sum of `signal_rank` outer products of
/// standard-normal vectors.
pub fn synthetic_class_means(spec: &SyntheticSpec) -> Result<Vec<DenseTensor>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let [i1, i2, i3] = spec.dims;
    let mut means = Vec::with_capacity(spec.classes);
    for _ in 0..spec.classes {
        let mut mean = DenseTensor::zeros(&spec.dims);
        for _ in 0..spec.signal_rank {
            let a = normal_vec(&mut rng, i1);
            let b = normal_vec(&mut rng, i2);
            let g = normal_vec(&mut rng, i3);
            let term = DenseTensor::from_fn(&spec.dims, |i| a[i[0]] * b[i[1]] * g[i[2]]);
            mean.data_mut().iter_mut().zip(term.data()).for_each(|(m, t)| *m += t);
        }
        means.push(mean);
    }
    Ok(means)
}

/// Samples are `mean_c + noise_sigma · N(0, 1)` noise, grouped by class.
/// Fully determined by the spec (including its seed).
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    let means = synthetic_class_means(spec)?;
    // A separate stream for noise keeps the means independent of per_class.
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0xA5A5_5A5A_D00D_F00D);
    let mut samples = Vec::with_capacity(spec.classes * spec.per_class);
    let mut labels = Vec::with_capacity(spec.classes * spec.per_class);
    for (c, mean) in means.iter().enumerate() {
        for _ in 0..spec.per_class {
            let mut x = mean.clone();
            for v in x.data_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *v += spec.noise_sigma * z;
            }
            samples.push(x);
            labels.push(c);
        }
    }
    let names = (0..spec.classes).map(|c| format!("class_{c}")).collect();
    LabeledDataset::new(samples, labels, names)
}

/// Stratified split: each class is shuffled with a seeded generator and its
/// first `ceil(train_fraction · N_c)` samples go to the training part. Both
/// parts keep the original sample order.
pub fn split_dataset(ds: &LabeledDataset, train_fraction: f64, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train_fraction {train_fraction} outside (0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0..ds.class_names.len() {
        let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == c).collect();
        if idx.is_empty() {
            continue;
        }
        if idx.len() < 2 {
            return Err(Error::DegenerateClasses(format!(
                "class {:?} has {} sample; splitting needs at least 2",
                ds.class_names[c],
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let n_train = (train_fraction * idx.len() as f64).ceil() as usize;
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.subset(&train, SplitTag::Train), ds.subset(&test, SplitTag::Test)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SyntheticSpec {
        SyntheticSpec {
            classes: 3,
            per_class: 10,
            dims: [4, 5, 2],
            signal_rank: 1,
            noise_sigma: 0.5,
            seed: 42,
        }
    }

    #[test]
    fn zero_noise_samples_equal_class_mean() {
        let ds = gen_synthetic(&SyntheticSpec {
            noise_sigma: 0.0,
            ..spec()
        })
        .unwrap();
        for c in 0..3 {
            let members: Vec<&DenseTensor> = ds
                .samples
                .iter()
                .zip(&ds.labels)
                .filter(|(_, &l)| l == c)
                .map(|(x, _)| x)
                .collect();
            assert!(members.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn generation_is_seeded() {
        assert_eq!(gen_synthetic(&spec()).unwrap(), gen_synthetic(&spec()).unwrap());
        let other = gen_synthetic(&SyntheticSpec { seed: 43, ..spec() }).unwrap();
        assert_ne!(gen_synthetic(&spec()).unwrap(), other);
    }

    #[test]
    fn class_means_are_distinct() {
        let means = synthetic_class_means(&spec()).unwrap();
        for a in 0..means.len() {
            for b in 0..a {
                let d: f64 = means[a]
                    .data()
                    .iter()
                    .zip(means[b].data())
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                assert!(d > 0.0);
            }
        }
    }

    #[test]
    fn half_split_is_stratified_partition() {
        let ds = gen_synthetic(&spec()).unwrap();
        let (train, test) = split_dataset(&ds, 0.5, 9).unwrap();
        assert_eq!(train.class_counts(), vec![5, 5, 5]);
        assert_eq!(test.class_counts(), vec![5, 5, 5]);
        assert_eq!(train.split, Some(SplitTag::Train));
        let mut all: Vec<&DenseTensor> = train.samples.iter().chain(&test.samples).collect();
        assert_eq!(all.len(), ds.len());
        for x in &ds.samples {
            let pos = all.iter().position(|y| *y == x).expect("sample kept");
            all.swap_remove(pos);
        }
        let again = split_dataset(&ds, 0.5, 9).unwrap();
        assert_eq!(again.0, train);
        assert_eq!(again.1, test);
    }

    #[test]
    fn odd_counts_round_up_for_training() {
        let ds = gen_synthetic(&SyntheticSpec { per_class: 5, ..spec() }).unwrap();
        let (train, test) = split_dataset(&ds, 0.5, 1).unwrap();
        assert_eq!(train.class_counts(), vec![3, 3, 3]);
        assert_eq!(test.class_counts(), vec![2, 2, 2]);
    }

    #[test]
    fn tiny_class_cannot_split() {
        let ds = gen_synthetic(&SyntheticSpec { per_class: 1, ..spec() }).unwrap();
        assert!(matches!(split_dataset(&ds, 0.5, 0), Err(Error::DegenerateClasses(_))));
    }

    #[test]
    fn labels_must_name_classes() {
        let x = DenseTensor::zeros(&[1]);
        assert!(LabeledDataset::new(vec![x], vec![2], vec!["a".into()]).is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = gen_synthetic(&spec()).unwrap();
        write_dataset(&ds, dir.path()).unwrap();
        let back = read_dataset(dir.path()).unwrap();
        assert_eq!(back, ds);
        let back = read_dataset(dir.path().join(MANIFEST)).unwrap();
        assert_eq!(back.len(), ds.len());
    }
}
