use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NasError;
use crate::arch_ir::{ActivationKind, BlockParams, ModelSpec, OpKind, Stage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvType {
    Mbconv,
    FusedMbconv,
}

impl fmt::Display for ConvType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConvType::Mbconv => "mbconv",
            ConvType::FusedMbconv => "fused_mbconv",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageChoice {
    pub conv_type: ConvType,
    pub kernel: u32,
    pub expansion: u32,
    pub se_ratio: f64,
    pub activation: ActivationKind,
}

/// Fixed per-stage layout the search fills in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkeletonStage {
    pub stride: u32,
    pub out_c: u32,
    pub repeats: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Skeleton {
    pub input_resolution: u32,
    pub stem_out_c: u32,
    pub stem_stride: u32,
    pub stem_activation: ActivationKind,
    pub stages: Vec<SkeletonStage>,
    pub head_out_c: u32,
    pub head_activation: ActivationKind,
}

impl Default for Skeleton {
    /// Stage ladder of the X-B0 family without the reshaping conv.
    fn default() -> Self {
        let st = |stride, out_c, repeats| SkeletonStage { stride, out_c, repeats };
        Self {
            input_resolution: 224,
            stem_out_c: 32,
            stem_stride: 2,
            stem_activation: ActivationKind::Swish,
            stages: vec![
                st(1, 16, 1),
                st(2, 24, 2),
                st(2, 40, 2),
                st(2, 80, 3),
                st(1, 112, 3),
                st(2, 192, 4),
                st(1, 320, 1),
            ],
            head_out_c: 1280,
            head_activation: ActivationKind::Relu,
        }
    }
}

/// Allowed values per field. The same sets apply to every stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChoiceSets {
    pub conv_type: Vec<ConvType>,
    pub kernel: Vec<u32>,
    pub expansion: Vec<u32>,
    pub se_ratio: Vec<f64>,
    pub activation: Vec<ActivationKind>,
    /// Stage indices the space-to-depth conv may be inserted before; `null` means none.
    pub s2d_position: Vec<Option<usize>>,
}

impl Default for ChoiceSets {
    fn default() -> Self {
        Self {
            conv_type: vec![ConvType::Mbconv, ConvType::FusedMbconv],
            kernel: vec![3, 5],
            expansion: vec![1, 6],
            se_ratio: vec![0.25, 0.5],
            activation: vec![ActivationKind::Relu, ActivationKind::Swish],
            s2d_position: vec![None, Some(1)],
        }
    }
}

/// Fields per stage, in encoding order.
pub const STAGE_FIELDS: usize = 5;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    #[serde(default)]
    pub skeleton: Skeleton,
    #[serde(default)]
    pub choices: ChoiceSets,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Candidate {
    pub stages: Vec<StageChoice>,
    pub s2d_position: Option<usize>,
}

/// Which field [`mutate`] touched.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MutationSite {
    Stage { stage: usize, field: usize },
    S2d,
}

fn dedup_ok<T: PartialEq>(v: &[T]) -> bool {
    v.iter().enumerate().all(|(i, x)| !v[..i].contains(x))
}

impl SpaceConfig {
    pub fn validate(&self) -> Result<(), NasError> {
        let bad = |m: String| Err(NasError::InvalidConfig(m));
        let sk = &self.skeleton;
        if sk.stages.is_empty() {
            return bad("skeleton has no stages".into());
        }
        if sk.input_resolution == 0 || sk.stem_out_c == 0 || sk.stem_stride == 0 || sk.head_out_c == 0 {
            return bad("skeleton resolution, stem and head sizes must be > 0".into());
        }
        for (i, s) in sk.stages.iter().enumerate() {
            if s.stride == 0 || s.out_c == 0 || s.repeats == 0 {
                return bad(format!("skeleton.stages[{i}]: stride, out_c and repeats must be > 0"));
            }
        }
        let c = &self.choices;
        let sizes = [
            ("conv_type", c.conv_type.len(), dedup_ok(&c.conv_type)),
            ("kernel", c.kernel.len(), dedup_ok(&c.kernel)),
            ("expansion", c.expansion.len(), dedup_ok(&c.expansion)),
            ("se_ratio", c.se_ratio.len(), dedup_ok(&c.se_ratio)),
            ("activation", c.activation.len(), dedup_ok(&c.activation)),
            ("s2d_position", c.s2d_position.len(), dedup_ok(&c.s2d_position)),
        ];
        for (name, n, unique) in sizes {
            if n == 0 {
                return bad(format!("choices.{name} is empty"));
            }
            if !unique {
                return bad(format!("choices.{name} has repeated values"));
            }
        }
        if let Some(k) = c.kernel.iter().find(|k| !matches!(k, 3 | 5)) {
            return bad(format!("choices.kernel: {k} not in {{3,5}}"));
        }
        if let Some(e) = c.expansion.iter().find(|e| !matches!(e, 1 | 6)) {
            return bad(format!("choices.expansion: {e} not in {{1,6}}"));
        }
        if let Some(r) = c.se_ratio.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
            return bad(format!("choices.se_ratio: {r} not in (0,1]"));
        }
        for p in c.s2d_position.iter().flatten() {
            let Some(st) = sk.stages.get(*p) else {
                return bad(format!("choices.s2d_position: stage {p} out of range"));
            };
            if st.stride != 2 {
                return bad(format!("choices.s2d_position: stage {p} has stride {}, need 2", st.stride));
            }
            let res = self.resolution_before(*p);
            if res % 2 != 0 {
                return bad(format!("choices.s2d_position: resolution {res} before stage {p} is odd"));
            }
        }
        Ok(())
    }

    /// Spatial size entering skeleton stage `idx`.
    pub fn resolution_before(&self, idx: usize) -> u32 {
        let sk = &self.skeleton;
        let mut r = sk.input_resolution.div_ceil(sk.stem_stride);
        for s in &sk.stages[..idx] {
            r = r.div_ceil(s.stride);
        }
        r
    }

    /// Cardinality of each field in encoding order: stage fields, then the s2d slot.
    pub fn radices(&self) -> Vec<usize> {
        let c = &self.choices;
        let per_stage = [
            c.conv_type.len(),
            c.kernel.len(),
            c.expansion.len(),
            c.se_ratio.len(),
            c.activation.len(),
        ];
        let mut r = Vec::with_capacity(self.skeleton.stages.len() * STAGE_FIELDS + 1);
        for _ in &self.skeleton.stages {
            r.extend_from_slice(&per_stage);
        }
        r.push(c.s2d_position.len());
        r
    }

    /// Number of candidates, saturating at `u128::MAX`.
    pub fn size(&self) -> u128 {
        self.radices()
            .iter()
            .fold(1u128, |acc, &n| acc.saturating_mul(n as u128))
    }

    pub fn encode(&self, cand: &Candidate) -> Result<Vec<usize>, NasError> {
        let c = &self.choices;
        if cand.stages.len() != self.skeleton.stages.len() {
            return Err(NasError::InvalidCandidate(format!(
                "{} stages, skeleton has {}",
                cand.stages.len(),
                self.skeleton.stages.len()
            )));
        }
        fn idx<T: PartialEq + fmt::Debug>(set: &[T], v: &T, what: &str) -> Result<usize, NasError> {
            set.iter()
                .position(|x| x == v)
                .ok_or_else(|| NasError::InvalidCandidate(format!("{what} {v:?} not in the choice set")))
        }
        let mut out = Vec::with_capacity(cand.stages.len() * STAGE_FIELDS + 1);
        for s in &cand.stages {
            out.push(idx(&c.conv_type, &s.conv_type, "conv_type")?);
            out.push(idx(&c.kernel, &s.kernel, "kernel")?);
            out.push(idx(&c.expansion, &s.expansion, "expansion")?);
            out.push(idx(&c.se_ratio, &s.se_ratio, "se_ratio")?);
            out.push(idx(&c.activation, &s.activation, "activation")?);
        }
        out.push(idx(&c.s2d_position, &cand.s2d_position, "s2d_position")?);
        Ok(out)
    }

    pub fn decode(&self, code: &[usize]) -> Candidate {
        let c = &self.choices;
        let stages = code[..code.len() - 1]
            .chunks(STAGE_FIELDS)
            .map(|f| StageChoice {
                conv_type: c.conv_type[f[0]],
                kernel: c.kernel[f[1]],
                expansion: c.expansion[f[2]],
                se_ratio: c.se_ratio[f[3]],
                activation: c.activation[f[4]],
            })
            .collect();
        Candidate {
            stages,
            s2d_position: c.s2d_position[code[code.len() - 1]],
        }
    }

    /// Candidate at mixed-radix position `n`, last field varying fastest.
    pub fn nth(&self, mut n: u128) -> Candidate {
        let radices = self.radices();
        let mut code = vec![0; radices.len()];
        for (slot, &r) in code.iter_mut().zip(&radices).rev() {
            *slot = (n % r as u128) as usize;
            n /= r as u128;
        }
        self.decode(&code)
    }

    /// Builds the network for a candidate. Inserting the reshaping conv before a
    /// stage takes over that stage's stride.
    pub fn to_spec(&self, cand: &Candidate, name: &str) -> Result<ModelSpec, NasError> {
        self.encode(cand)?;
        let sk = &self.skeleton;
        let mut stages = vec![Stage::new(
            OpKind::Stem { kernel: 3, stride: sk.stem_stride, out_c: sk.stem_out_c },
            1,
            sk.stem_activation,
        )];
        for (i, (st, ch)) in sk.stages.iter().zip(&cand.stages).enumerate() {
            let mut stride = st.stride;
            if cand.s2d_position == Some(i) {
                stages.push(Stage::new(OpKind::SpaceToDepthConv { block: 2 }, 1, ch.activation));
                stride = 1;
            }
            let p = BlockParams::new(ch.kernel, ch.expansion, ch.se_ratio, stride, st.out_c);
            let op = match ch.conv_type {
                ConvType::Mbconv => OpKind::MbConv(p),
                ConvType::FusedMbconv => OpKind::FusedMbConv(p),
            };
            stages.push(Stage::new(op, st.repeats, ch.activation).scalable());
        }
        stages.push(Stage::new(OpKind::Head { out_c: sk.head_out_c }, 1, sk.head_activation));
        Ok(ModelSpec::new(name, sk.input_resolution, stages))
    }

    /// The candidate whose fields all take their first listed value.
    pub fn first_candidate(&self) -> Candidate {
        self.nth(0)
    }
}

/// Uniform independent choice per field.
pub fn sample_with<R: Rng + ?Sized>(space: &SpaceConfig, rng: &mut R) -> Candidate {
    let code: Vec<usize> = space.radices().iter().map(|&n| rng.gen_range(0..n)).collect();
    space.decode(&code)
}

pub fn sample(space: &SpaceConfig, seed: u64) -> Result<Candidate, NasError> {
    use rand::SeedableRng;
    space.validate()?;
    Ok(sample_with(space, &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed)))
}

/// Resamples exactly one field with more than one option to a different value.
pub fn mutate_with<R: Rng + ?Sized>(
    space: &SpaceConfig,
    cand: &Candidate,
    rng: &mut R,
) -> Result<(Candidate, MutationSite), NasError> {
    let mut code = space.encode(cand)?;
    let radices = space.radices();
    let sites: Vec<usize> = (0..radices.len()).filter(|&i| radices[i] > 1).collect();
    let &slot = sites.choose(rng).ok_or(NasError::NoMutationPossible)?;
    let shift = rng.gen_range(1..radices[slot]);
    code[slot] = (code[slot] + shift) % radices[slot];
    let site = if slot == radices.len() - 1 {
        MutationSite::S2d
    } else {
        MutationSite::Stage {
            stage: slot / STAGE_FIELDS,
            field: slot % STAGE_FIELDS,
        }
    };
    Ok((space.decode(&code), site))
}

pub fn mutate(space: &SpaceConfig, cand: &Candidate, seed: u64) -> Result<Candidate, NasError> {
    use rand::SeedableRng;
    space.validate()?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    Ok(mutate_with(space, cand, &mut rng)?.0)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::arch_ir::validate_model;

    fn singleton() -> SpaceConfig {
        SpaceConfig {
            skeleton: Skeleton::default(),
            choices: ChoiceSets {
                conv_type: vec![ConvType::Mbconv],
                kernel: vec![3],
                expansion: vec![6],
                se_ratio: vec![0.25],
                activation: vec![ActivationKind::Relu],
                s2d_position: vec![None],
            },
        }
    }

    #[test]
    fn seed_is_deterministic() {
        let s = SpaceConfig::default();
        assert_eq!(sample(&s, 42).unwrap(), sample(&s, 42).unwrap());
    }

    #[test]
    fn singleton_space_has_one_candidate() {
        let s = singleton();
        assert_eq!(s.size(), 1);
        assert_eq!(sample(&s, 1).unwrap(), s.first_candidate());
        assert!(matches!(
            mutate(&s, &s.first_candidate(), 3),
            Err(NasError::NoMutationPossible)
        ));
    }

    #[test]
    fn sampling_covers_every_option() {
        let s = SpaceConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let radices = s.radices();
        let mut seen: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); radices.len()];
        for _ in 0..10_000 {
            let code = s.encode(&sample_with(&s, &mut rng)).unwrap();
            for (set, v) in seen.iter_mut().zip(code) {
                set.insert(v);
            }
        }
        for (set, r) in seen.iter().zip(radices) {
            assert_eq!(set.len(), r);
        }
    }

    #[test]
    fn mutation_changes_exactly_one_field() {
        let s = SpaceConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut sites = BTreeSet::new();
        let mut parent = sample_with(&s, &mut rng);
        for _ in 0..1000 {
            let (child, site) = mutate_with(&s, &parent, &mut rng).unwrap();
            let a = s.encode(&parent).unwrap();
            let b = s.encode(&child).unwrap();
            assert_eq!(a.iter().zip(&b).filter(|(x, y)| x != y).count(), 1);
            sites.insert(site);
            parent = child;
        }
        assert_eq!(sites.len(), s.radices().len());
    }

    #[test]
    fn size_is_product_of_cardinalities() {
        let s = SpaceConfig::default();
        assert_eq!(s.size(), 32u128.pow(7) * 2);
        let mut t = singleton();
        t.choices.kernel = vec![3, 5];
        t.choices.s2d_position = vec![None, Some(1), Some(2)];
        assert_eq!(t.size(), 2u128.pow(7) * 3);
    }

    #[test]
    fn nth_enumerates_in_code_order() {
        let mut s = singleton();
        s.skeleton.stages.truncate(2);
        s.choices.activation = vec![ActivationKind::Relu, ActivationKind::Swish];
        let all: Vec<Vec<usize>> = (0..s.size()).map(|n| s.encode(&s.nth(n)).unwrap()).collect();
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(all, sorted);
    }

    #[test]
    fn candidates_build_valid_models() {
        let s = SpaceConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let c = sample_with(&s, &mut rng);
            let m = s.to_spec(&c, "c").unwrap();
            let v = validate_model(&m).unwrap();
            assert_eq!(v.stages.last().unwrap().output.c, 1000);
            let with_s2d = m.stages.iter().any(|st| matches!(st.op, OpKind::SpaceToDepthConv { .. }));
            assert_eq!(with_s2d, c.s2d_position.is_some());
        }
    }

    #[test]
    fn s2d_on_stride_one_stage_is_rejected() {
        let mut s = SpaceConfig::default();
        s.choices.s2d_position = vec![Some(0)];
        assert!(matches!(s.validate(), Err(NasError::InvalidConfig(_))));
    }

    #[test]
    fn foreign_value_is_rejected() {
        let s = SpaceConfig::default();
        let mut c = s.first_candidate();
        c.stages[0].kernel = 7;
        assert!(matches!(s.encode(&c), Err(NasError::InvalidCandidate(_))));
    }
}
