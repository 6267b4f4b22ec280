//! TOML session configuration files.
//!
//! A session file names the protocol parameters, optionally the exact
//! message bits for both parties, and optionally an attack:
//!
//! ```toml
//! n_message_pairs = 2
//! initial_states = ["psi_minus"]   # one entry broadcasts to every group
//! first_check_samples = 4          # default: n_message_pairs
//! second_check_samples = 4         # default: n_message_pairs
//! error_threshold = 0.0            # default: 0.0
//! seed = 42                        # default: 42
//! alice_bits = ["01", "11"]        # default: drawn from the seed
//! bob_bits = ["10", "00"]
//!
//! [attack]
//! kind = "entangle-measure"        # or intercept-resend | measure-resend | passive
//! theta = 0.5
//! ```

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::adversary::{AdversaryError, AttackModel};
use crate::bell::BellState;
use crate::cavity::EncodingOp;
use crate::protocol::{MessageBits, ProtocolConfig, ProtocolError};

/// RNG stream for message bits derived from the seed, far away from the
/// per-trial streams the experiment harness uses.
const BITS_STREAM: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error("alice_bits and bob_bits must be given together or both omitted")]
    HalfSpecifiedBits,
    #[error(transparent)]
    Invalid(#[from] ProtocolError),
    #[error(transparent)]
    Attack(#[from] AdversaryError),
}

/// Everything a session run needs, as loaded from one file.
#[derive(Debug, Clone)]
pub struct SessionSetup {
    pub config: ProtocolConfig,
    pub bits: MessageBits,
    pub attack: Option<AttackModel>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionFile {
    n_message_pairs: usize,
    initial_states: Vec<BellState>,
    randomize_initials: Option<bool>,
    first_check_samples: Option<usize>,
    second_check_samples: Option<usize>,
    error_threshold: Option<f64>,
    seed: Option<u64>,
    alice_bits: Option<Vec<EncodingOp>>,
    bob_bits: Option<Vec<EncodingOp>>,
    attack: Option<AttackModel>,
}

/// Load and validate a session file from disk.
pub fn load_session(path: impl AsRef<Path>) -> Result<SessionSetup, ConfigError> {
    load_session_with_seed(path, None)
}

/// Like [`load_session`], but `seed_override` replaces the file's seed
/// (and re-derives seed-drawn message bits) when given.
pub fn load_session_with_seed(
    path: impl AsRef<Path>,
    seed_override: Option<u64>,
) -> Result<SessionSetup, ConfigError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: shown.clone(), source })?;
    parse_session_with_seed(&text, &shown, seed_override)
}

/// Parse session TOML; `origin` labels parse errors (usually the path).
pub fn parse_session(text: &str, origin: &str) -> Result<SessionSetup, ConfigError> {
    parse_session_with_seed(text, origin, None)
}

/// Like [`parse_session`] with an optional seed override.
pub fn parse_session_with_seed(
    text: &str,
    origin: &str,
    seed_override: Option<u64>,
) -> Result<SessionSetup, ConfigError> {
    let file: SessionFile = toml::from_str(text)
        .map_err(|source| ConfigError::Parse { path: origin.to_string(), source })?;
    let n = file.n_message_pairs;
    let seed = seed_override.or(file.seed).unwrap_or(crate::DEFAULT_SEED);
    let initial_states = if file.initial_states.len() == 1 && n > 1 {
        vec![file.initial_states[0]; n]
    } else {
        file.initial_states
    };
    let config = ProtocolConfig {
        n_message_pairs: n,
        initial_states,
        randomize_initials: file.randomize_initials.unwrap_or(false),
        first_check_samples: file.first_check_samples.unwrap_or(n),
        second_check_samples: file.second_check_samples.unwrap_or(n),
        error_threshold: file.error_threshold.unwrap_or(0.0),
        rng_seed: seed,
    };
    config.validate()?;
    let bits = match (file.alice_bits, file.bob_bits) {
        (Some(alice), Some(bob)) => MessageBits { alice, bob },
        (None, None) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(BITS_STREAM);
            MessageBits::random(n, &mut rng)
        }
        _ => return Err(ConfigError::HalfSpecifiedBits),
    };
    bits.validate(n)?;
    if let Some(AttackModel::EntangleMeasure { theta }) = file.attack {
        AttackModel::entangle_measure(theta)?;
    }
    Ok(SessionSetup { config, bits, attack: file.attack })
}
