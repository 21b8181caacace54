//! Fixed-layout binary state frame: 68 bytes, little-endian.
//!
//! Layout (offsets in bytes):
//!
//! | offset | size | field                                  |
//! |--------|------|----------------------------------------|
//! | 0      | 2    | magic `0x4C 0x43`                      |
//! | 2      | 1    | version (= 1)                          |
//! | 3      | 1    | message type (1 = pose + twist)        |
//! | 4      | 4    | sequence number, u32                   |
//! | 8      | 8    | sender monotonic timestamp, ns, u64    |
//! | 16     | 12   | position xyz, 3 × f32                  |
//! | 28     | 16   | attitude quaternion wxyz, 4 × f32      |
//! | 44     | 12   | linear velocity xyz, 3 × f32           |
//! | 56     | 12   | angular velocity xyz, 3 × f32          |
//!
//! Total: 16-byte header + 52-byte payload = 68 bytes, always.

use thiserror::Error;

/// Total frame length, bytes.
pub const FRAME_LEN: usize = 68;
/// Protocol magic.
pub const MAGIC: [u8; 2] = [0x4C, 0x43];
/// Current protocol version.
pub const VERSION: u8 = 1;
/// Message type: pose + twist.
pub const MSG_POSE_TWIST: u8 = 1;

/// Decoded pose/twist state frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateFrame {
    pub seq: u32,
    pub timestamp_ns: u64,
    pub position: [f32; 3],
    /// Attitude quaternion, wxyz order.
    pub quaternion: [f32; 4],
    pub linear_velocity: [f32; 3],
    pub angular_velocity: [f32; 3],
}

impl StateFrame {
    /// Identity-attitude frame at the origin.
    pub fn zero(seq: u32, timestamp_ns: u64) -> Self {
        Self {
            seq,
            timestamp_ns,
            position: [0.0; 3],
            quaternion: [1.0, 0.0, 0.0, 0.0],
            linear_velocity: [0.0; 3],
            angular_velocity: [0.0; 3],
        }
    }

    /// Whether the decoded quaternion norm lies inside the accepted band
    /// [0.99, 1.01]. Out-of-band frames are flagged, not rejected.
    pub fn quaternion_norm_ok(&self) -> bool {
        let n2: f32 = self.quaternion.iter().map(|v| v * v).sum();
        let n = n2.sqrt();
        (0.99..=1.01).contains(&n)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("buffer too short: {0} bytes, need {FRAME_LEN}")]
    TooShort(usize),
    #[error("bad magic: {0:02X} {1:02X}")]
    BadMagic(u8, u8),
    #[error("unknown protocol version {0}")]
    UnknownVersion(u8),
    #[error("unknown message type {0}")]
    UnknownMsgType(u8),
}

/// Encode a frame into its fixed 68-byte layout.
pub fn encode(frame: &StateFrame) -> [u8; FRAME_LEN] {
    let mut out = [0u8; FRAME_LEN];
    out[0] = MAGIC[0];
    out[1] = MAGIC[1];
    out[2] = VERSION;
    out[3] = MSG_POSE_TWIST;
    out[4..8].copy_from_slice(&frame.seq.to_le_bytes());
    out[8..16].copy_from_slice(&frame.timestamp_ns.to_le_bytes());
    let mut k = 16;
    let mut put = |v: f32, k: &mut usize| {
        out[*k..*k + 4].copy_from_slice(&v.to_le_bytes());
        *k += 4;
    };
    for v in frame.position {
        put(v, &mut k);
    }
    for v in frame.quaternion {
        put(v, &mut k);
    }
    for v in frame.linear_velocity {
        put(v, &mut k);
    }
    for v in frame.angular_velocity {
        put(v, &mut k);
    }
    out
}

/// Decode a frame, validating length, magic, version, and message type.
pub fn decode(bytes: &[u8]) -> Result<StateFrame, DecodeError> {
    if bytes.len() < FRAME_LEN {
        return Err(DecodeError::TooShort(bytes.len()));
    }
    if bytes[0] != MAGIC[0] || bytes[1] != MAGIC[1] {
        return Err(DecodeError::BadMagic(bytes[0], bytes[1]));
    }
    if bytes[2] != VERSION {
        return Err(DecodeError::UnknownVersion(bytes[2]));
    }
    if bytes[3] != MSG_POSE_TWIST {
        return Err(DecodeError::UnknownMsgType(bytes[3]));
    }
    let seq = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let timestamp_ns = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let mut k = 16;
    let get = |k: &mut usize| -> f32 {
        let v = f32::from_le_bytes(bytes[*k..*k + 4].try_into().unwrap());
        *k += 4;
        v
    };
    let position = [get(&mut k), get(&mut k), get(&mut k)];
    let quaternion = [get(&mut k), get(&mut k), get(&mut k), get(&mut k)];
    let linear_velocity = [get(&mut k), get(&mut k), get(&mut k)];
    let angular_velocity = [get(&mut k), get(&mut k), get(&mut k)];
    Ok(StateFrame {
        seq,
        timestamp_ns,
        position,
        quaternion,
        linear_velocity,
        angular_velocity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    /// The golden zero frame: header, zeroed seq/timestamp, then identity
    /// quaternion among zero floats.
    fn golden_bytes() -> [u8; FRAME_LEN] {
        let mut b = [0u8; FRAME_LEN];
        b[0] = 0x4C;
        b[1] = 0x43;
        b[2] = 0x01;
        b[3] = 0x01;
        // position zeros at 16..28, then quaternion w = 1.0f32
        b[28..32].copy_from_slice(&1.0f32.to_le_bytes());
        b
    }

    #[test]
    fn golden_vector_encodes_exactly() {
        let frame = StateFrame::zero(0, 0);
        let bytes = encode(&frame);
        assert_eq!(bytes.len(), FRAME_LEN);
        assert_eq!(bytes, golden_bytes());
    }

    #[test]
    fn golden_vector_decodes_to_zero_frame() {
        let frame = decode(&golden_bytes()).unwrap();
        assert_eq!(frame, StateFrame::zero(0, 0));
        assert!(frame.quaternion_norm_ok());
    }

    #[test]
    fn truncated_and_malformed_inputs_yield_distinct_errors() {
        let good = encode(&StateFrame::zero(1, 2));
        assert_eq!(decode(&good[..67]), Err(DecodeError::TooShort(67)));
        let mut bad_magic = good;
        bad_magic[0] = 0xFF;
        assert_eq!(decode(&bad_magic), Err(DecodeError::BadMagic(0xFF, 0x43)));
        let mut bad_version = good;
        bad_version[2] = 9;
        assert_eq!(decode(&bad_version), Err(DecodeError::UnknownVersion(9)));
        let mut bad_type = good;
        bad_type[3] = 7;
        assert_eq!(decode(&bad_type), Err(DecodeError::UnknownMsgType(7)));
    }

    #[test]
    fn round_trip_on_1e5_random_frames() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4242);
        for i in 0..100_000u32 {
            let frame = StateFrame {
                seq: i,
                timestamp_ns: rng.gen(),
                position: [rng.gen::<f32>() * 10.0 - 5.0; 3].map(|v| v + rng.gen::<f32>()),
                quaternion: [
                    rng.gen::<f32>() * 2.0 - 1.0,
                    rng.gen::<f32>() * 2.0 - 1.0,
                    rng.gen::<f32>() * 2.0 - 1.0,
                    rng.gen::<f32>() * 2.0 - 1.0,
                ],
                linear_velocity: [
                    rng.gen::<f32>() * 20.0 - 10.0,
                    rng.gen::<f32>() * 20.0 - 10.0,
                    rng.gen::<f32>() * 20.0 - 10.0,
                ],
                angular_velocity: [
                    rng.gen::<f32>() * 50.0 - 25.0,
                    rng.gen::<f32>() * 50.0 - 25.0,
                    rng.gen::<f32>() * 50.0 - 25.0,
                ],
            };
            let back = decode(&encode(&frame)).unwrap();
            assert_eq!(back, frame);
        }
    }

    #[test]
    fn quaternion_norm_flagging() {
        let mut f = StateFrame::zero(0, 0);
        assert!(f.quaternion_norm_ok());
        f.quaternion = [1.02, 0.0, 0.0, 0.0];
        assert!(!f.quaternion_norm_ok());
        f.quaternion = [0.5, 0.5, 0.5, 0.5]; // norm = 1
        assert!(f.quaternion_norm_ok());
    }

    proptest! {
        /// Codec round-trip identity for finite payloads, constant size.
        #[test]
        fn prop_round_trip(
            seq in any::<u32>(),
            ts in any::<u64>(),
            px in -1e6f32..1e6, py in -1e6f32..1e6, pz in -1e6f32..1e6,
            qw in -2.0f32..2.0, qx in -2.0f32..2.0, qy in -2.0f32..2.0, qz in -2.0f32..2.0,
            vx in -1e4f32..1e4, vy in -1e4f32..1e4, vz in -1e4f32..1e4,
            wx in -1e3f32..1e3, wy in -1e3f32..1e3, wz in -1e3f32..1e3,
        ) {
            let frame = StateFrame {
                seq,
                timestamp_ns: ts,
                position: [px, py, pz],
                quaternion: [qw, qx, qy, qz],
                linear_velocity: [vx, vy, vz],
                angular_velocity: [wx, wy, wz],
            };
            let bytes = encode(&frame);
            prop_assert_eq!(bytes.len(), FRAME_LEN);
            let back = decode(&bytes).unwrap();
            prop_assert_eq!(back, frame);
        }

        /// Decoder never panics or over-reads on arbitrary bytes.
        #[test]
        fn prop_decoder_total_on_garbage(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
            let _ = decode(&bytes);
        }
    }
}
