//! Wire messages. Every frame is one `Envelope`; statistic payloads travel
//! as IEEE-754 bit patterns so decoding reproduces the sender's doubles
//! exactly. No variant can carry raw sample coordinates.

use itd_core::kernel::ClientWeightVector;
use itd_core::permtest::TestReport;
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    pub protocol_version: u32,
    pub run_id: u64,
    pub body: Body,
}

impl Envelope {
    pub fn new(run_id: u64, body: Body) -> Self {
        Envelope { protocol_version: PROTOCOL_VERSION, run_id, body }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum Body {
    /// Announces the selected cohort and its aggregation weights.
    SelectClients {
        client_ids: Vec<u64>,
        weights: ClientWeightVector,
    },
    /// Asks one client for its observed statistic and a permuted batch.
    ComputeRequest {
        /// Wasserstein order for the local distances.
        #[serde(with = "f64_bits")]
        order: f64,
        permutations: usize,
        seed: u64,
    },
    /// The client's observed squared distance. Scalar only.
    LocalResult {
        client_id: u64,
        #[serde(with = "f64_bits")]
        w2_squared: f64,
    },
    /// The client's permuted local statistics. Scalars only.
    PermutedBatch {
        client_id: u64,
        #[serde(with = "f64_bits_vec")]
        stats: Vec<f64>,
    },
    /// Final decision, emitted once per run.
    Verdict { report: TestReport },
}

impl Body {
    pub fn kind(&self) -> &'static str {
        match self {
            Body::SelectClients { .. } => "SelectClients",
            Body::ComputeRequest { .. } => "ComputeRequest",
            Body::LocalResult { .. } => "LocalResult",
            Body::PermutedBatch { .. } => "PermutedBatch",
            Body::Verdict { .. } => "Verdict",
        }
    }
}

mod f64_bits {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(v.to_bits())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        u64::deserialize(d).map(f64::from_bits)
    }
}

mod f64_bits_vec {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.to_bits()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let bits = Vec::<u64>::deserialize(d)?;
        Ok(bits.into_iter().map(f64::from_bits).collect())
    }
}
