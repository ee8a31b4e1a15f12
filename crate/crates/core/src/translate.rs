//! Cloze-to-question translators: identity mapping, noisy cloze, and
//! dependency reconstruction (DRC).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::answer::{MaskCategory, UnknownCategory};
use crate::cloze::{ClozeError, ClozeQuestion};
use crate::tree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Identity,
    Noise,
    Drc,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Identity => "identity",
            Method::Noise => "noise",
            Method::Drc => "drc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" => Ok(Method::Identity),
            "noise" => Ok(Method::Noise),
            "drc" => Ok(Method::Drc),
            other => Err(format!(
                "unknown translator {other:?} (expected identity, noise or drc)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaturalQuestion {
    pub text: String,
    pub method: Method,
}

/// Wh-word for a mask category name such as `"THING"`.
pub fn wh_word(category: &str) -> Result<&'static str, UnknownCategory> {
    category.parse::<MaskCategory>().map(MaskCategory::wh_word)
}

/// A translator together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Translator {
    Identity,
    Noise { p_drop: f64, k_window: usize, seed: u64 },
    Drc,
}

impl Translator {
    pub const DEFAULT_P_DROP: f64 = 0.1;
    pub const DEFAULT_K_WINDOW: usize = 3;

    pub fn from_method(method: Method, seed: u64) -> Self {
        match method {
            Method::Identity => Translator::Identity,
            Method::Noise => Translator::Noise {
                p_drop: Self::DEFAULT_P_DROP,
                k_window: Self::DEFAULT_K_WINDOW,
                seed,
            },
            Method::Drc => Translator::Drc,
        }
    }

    pub fn method(&self) -> Method {
        match self {
            Translator::Identity => Method::Identity,
            Translator::Noise { .. } => Method::Noise,
            Translator::Drc => Method::Drc,
        }
    }

    /// Translates `cloze`. Noise is reseeded from `salt` so each cloze gets
    /// its own reproducible stream.
    pub fn translate(&self, cloze: &ClozeQuestion, salt: u64) -> Result<NaturalQuestion, ClozeError> {
        match *self {
            Translator::Identity => Ok(translate_identity(cloze)),
            Translator::Noise { p_drop, k_window, seed } => Ok(translate_noise(cloze, p_drop, k_window, seed ^ salt)),
            Translator::Drc => translate_drc(cloze),
        }
    }
}

/// Replaces the mask with its wh-word, leaving everything else in place.
pub fn translate_identity(cloze: &ClozeQuestion) -> NaturalQuestion {
    let order: Vec<usize> = (0..cloze.tokens.len()).collect();
    NaturalQuestion {
        text: cloze.render(&order, cloze.category.wh_word()),
        method: Method::Identity,
    }
}

/// Order of `n` items after a local shuffle in which no item moves more
/// than `k` positions: item `i` gets key `i + u`, `u ~ U[0, k+1)`, and items
/// are sorted by key.
pub fn local_shuffle<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let span = (k + 1) as f64;
    let mut keyed: Vec<(f64, usize)> = (0..n).map(|i| (i as f64 + rng.gen_range(0.0..span), i)).collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, i)| i).collect()
}

/// Drops each non-mask token with probability `p_drop`, locally shuffles
/// the survivors within `k_window`, then applies identity mapping.
pub fn translate_noise(cloze: &ClozeQuestion, p_drop: f64, k_window: usize, seed: u64) -> NaturalQuestion {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let survivors: Vec<usize> = (0..cloze.tokens.len())
        .filter(|&i| cloze.tokens[i].is_mask || rng.gen::<f64>() >= p_drop)
        .collect();
    let order: Vec<usize> = local_shuffle(survivors.len(), k_window, &mut rng)
        .into_iter()
        .map(|i| survivors[i])
        .collect();
    NaturalQuestion {
        text: cloze.render(&order, cloze.category.wh_word()),
        method: Method::Noise,
    }
}

/// Token indices of the DRC output, in emission order, after dropping
/// leading and trailing punctuation.
///
/// 1. Subtrees of the mask's left dependents are pruned.
/// 2. On the path from the mask up to the root, each ancestor's
///    mask-bearing child is marked as moved.
/// 3. A node emits its moved child first, then its other left dependents,
///    itself, and its other right dependents, in surface order.
pub fn drc_order(cloze: &ClozeQuestion) -> Result<Vec<usize>, ClozeError> {
    let heads = cloze.heads();
    let mask = cloze.mask_index;
    if !cloze.tokens.get(mask).is_some_and(|t| t.is_mask) {
        return Err(ClozeError::NoMask);
    }
    let root = tree::check_tree(&heads)?;
    let kids = tree::children(&heads);

    let mut removed = vec![false; heads.len()];
    for &c in kids[mask].iter().filter(|&&c| c < mask) {
        for n in tree::subtree(&kids, c) {
            removed[n] = true;
        }
    }

    let mut moved: Vec<Option<usize>> = vec![None; heads.len()];
    let path = tree::path_to_root(&heads, mask);
    for pair in path.windows(2) {
        moved[pair[1]] = Some(pair[0]);
    }

    let mut out = Vec::with_capacity(heads.len());
    emit(root, &kids, &removed, &moved, &mut out);

    let is_punct = |i: &usize| cloze.tokens[*i].is_punct();
    let lead = out.iter().take_while(|i| is_punct(i)).count();
    let trail = out[lead..].iter().rev().take_while(|i| is_punct(i)).count();
    out.truncate(out.len() - trail);
    out.drain(..lead);
    Ok(out)
}

fn emit(node: usize, kids: &[Vec<usize>], removed: &[bool], moved: &[Option<usize>], out: &mut Vec<usize>) {
    if let Some(m) = moved[node] {
        emit(m, kids, removed, moved, out);
    }
    let rest = kids[node]
        .iter()
        .copied()
        .filter(|&c| !removed[c] && Some(c) != moved[node]);
    for c in rest.clone().filter(|&c| c < node) {
        emit(c, kids, removed, moved, out);
    }
    out.push(node);
    for c in rest.filter(|&c| c > node) {
        emit(c, kids, removed, moved, out);
    }
}

/// Dependency-reconstruction translation; tokens are joined by single
/// spaces and the mask becomes its wh-word.
pub fn translate_drc(cloze: &ClozeQuestion) -> Result<NaturalQuestion, ClozeError> {
    let order = drc_order(cloze)?;
    let wh = cloze.category.wh_word();
    let words: Vec<&str> = order
        .iter()
        .map(|&i| {
            if cloze.tokens[i].is_mask {
                wh
            } else {
                cloze.tokens[i].text.as_str()
            }
        })
        .collect();
    Ok(NaturalQuestion {
        text: words.join(" "),
        method: Method::Drc,
    })
}
