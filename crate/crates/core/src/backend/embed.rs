use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("embedding provider: {0}")]
    Provider(String),
}

pub trait Embedder: Send + Sync {
    /// Unit-length embedding of `text`.
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError>;
}

pub(crate) fn normalize(mut v: Vec<f64>) -> Result<Vec<f64>, EmbedError> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(EmbedError::ZeroNorm);
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(v)
}

/// `dot(u, v) / (|u| |v|)`, clamped to [-1, 1].
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, EmbedError> {
    if u.len() != v.len() {
        return Err(EmbedError::DimensionMismatch(u.len(), v.len()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(EmbedError::ZeroNorm);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Offline stand-in for an embedding service: token counts hashed into a
/// fixed number of buckets. Tokens are lowercased and stripped of
/// punctuation.
#[derive(Debug, Clone, Copy)]
pub struct HashedBagOfWords {
    pub dimension: usize,
}

impl Default for HashedBagOfWords {
    fn default() -> Self {
        HashedBagOfWords { dimension: 1024 }
    }
}

impl HashedBagOfWords {
    pub fn bucket(&self, token: &str) -> usize {
        let d = Sha256::digest(token.as_bytes());
        let mut b = [0u8; 8];
        b.copy_from_slice(&d[..8]);
        (u64::from_le_bytes(b) % self.dimension as u64) as usize
    }
}

impl Embedder for HashedBagOfWords {
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        if text.trim().is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let mut v = vec![0.0; self.dimension];
        for token in crate::evaluate::tokens(text) {
            v[self.bucket(&token)] += 1.0;
        }
        normalize(v)
    }
}
