//! The verbose baseline codec: a self-describing JSON encoding of the same
//! pose/twist state, roughly an order of magnitude larger on the wire and
//! correspondingly slower to serialize and parse. Used only by the latency
//! benchmark as the contrast case.

use serde::{Deserialize, Serialize};

use super::codec::StateFrame;

#[derive(Debug, Serialize, Deserialize)]
struct VerboseMessage {
    message_type: String,
    protocol: String,
    protocol_version: u32,
    sequence_number: u32,
    timestamp_nanoseconds: u64,
    position_meters: Coordinates,
    attitude_quaternion: QuaternionFields,
    linear_velocity_meters_per_second: Coordinates,
    angular_velocity_radians_per_second: Coordinates,
}

#[derive(Debug, Serialize, Deserialize)]
struct Coordinates {
    x: f64,
    y: f64,
    z: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct QuaternionFields {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

fn coords(v: [f32; 3]) -> Coordinates {
    Coordinates {
        x: v[0] as f64,
        y: v[1] as f64,
        z: v[2] as f64,
    }
}

/// Encode a state frame as self-describing text.
pub fn encode_verbose(frame: &StateFrame) -> Vec<u8> {
    let msg = VerboseMessage {
        message_type: "pose_twist_state".to_string(),
        protocol: "verbose_state_stream".to_string(),
        protocol_version: 1,
        sequence_number: frame.seq,
        timestamp_nanoseconds: frame.timestamp_ns,
        position_meters: coords(frame.position),
        attitude_quaternion: QuaternionFields {
            w: frame.quaternion[0] as f64,
            x: frame.quaternion[1] as f64,
            y: frame.quaternion[2] as f64,
            z: frame.quaternion[3] as f64,
        },
        linear_velocity_meters_per_second: coords(frame.linear_velocity),
        angular_velocity_radians_per_second: coords(frame.angular_velocity),
    };
    serde_json::to_vec_pretty(&msg).expect("verbose encode")
}

/// Parse the verbose encoding back into a state frame.
pub fn decode_verbose(bytes: &[u8]) -> Result<StateFrame, serde_json::Error> {
    let msg: VerboseMessage = serde_json::from_slice(bytes)?;
    Ok(StateFrame {
        seq: msg.sequence_number,
        timestamp_ns: msg.timestamp_nanoseconds,
        position: [
            msg.position_meters.x as f32,
            msg.position_meters.y as f32,
            msg.position_meters.z as f32,
        ],
        quaternion: [
            msg.attitude_quaternion.w as f32,
            msg.attitude_quaternion.x as f32,
            msg.attitude_quaternion.y as f32,
            msg.attitude_quaternion.z as f32,
        ],
        linear_velocity: [
            msg.linear_velocity_meters_per_second.x as f32,
            msg.linear_velocity_meters_per_second.y as f32,
            msg.linear_velocity_meters_per_second.z as f32,
        ],
        angular_velocity: [
            msg.angular_velocity_radians_per_second.x as f32,
            msg.angular_velocity_radians_per_second.y as f32,
            msg.angular_velocity_radians_per_second.z as f32,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcp::codec::FRAME_LEN;

    #[test]
    fn verbose_round_trip() {
        let frame = StateFrame {
            seq: 17,
            timestamp_ns: 123_456_789,
            position: [1.5, -0.25, 2.0],
            quaternion: [0.9689124, 0.247404, 0.0, 0.0],
            linear_velocity: [0.1, 0.2, -0.3],
            angular_velocity: [0.0, 0.5, -1.0],
        };
        let back = decode_verbose(&encode_verbose(&frame)).unwrap();
        assert_eq!(back.seq, frame.seq);
        assert_eq!(back.timestamp_ns, frame.timestamp_ns);
        for i in 0..3 {
            assert_eq!(back.position[i], frame.position[i]);
            assert_eq!(back.linear_velocity[i], frame.linear_velocity[i]);
        }
    }

    #[test]
    fn verbose_is_roughly_ten_times_larger() {
        let frame = StateFrame {
            seq: 123_456,
            timestamp_ns: 987_654_321_000,
            position: [1.2345, -0.5678, 2.3456],
            quaternion: [0.999, 0.012, -0.034, 0.005],
            linear_velocity: [3.21, -1.23, 0.45],
            angular_velocity: [0.12, -0.34, 0.56],
        };
        let len = encode_verbose(&frame).len();
        assert!(
            len >= 8 * FRAME_LEN,
            "verbose encoding only {len} bytes vs binary {FRAME_LEN}"
        );
    }
}
