//! Side-by-side latency benchmark: the binary state codec against the
//! verbose self-describing text baseline, on the same transport and host.
//!
//! Run with `cargo run --release --example latency_bench`.

use jugglesim::lcp::{run_latency_bench, BenchConfig, CodecKind, TransportKind};

fn main() {
    let mut base = BenchConfig {
        rate_hz: 200.0,
        duration_s: 5.0,
        transport: TransportKind::Loopback,
        codec: CodecKind::Lcp,
        inject_drops: false,
        deterministic: false,
    };

    println!("publishing {} Hz for {} s on {}", base.rate_hz, base.duration_s, base.transport.as_str());
    for codec in [CodecKind::Lcp, CodecKind::Verbose] {
        base.codec = codec;
        let report = run_latency_bench(&base).expect("bench");
        println!(
            "{:8} | frames {:5}/{:5} | bytes/frame {:7.1} | median latency {:9.1} us | median staleness {:9.1} us | decode errors {}",
            codec.as_str(),
            report.frames_received,
            report.frames_published,
            report.mean_frame_bytes,
            report.median_latency_ns() as f64 / 1000.0,
            report.median_staleness_ns() as f64 / 1000.0,
            report.decode_errors,
        );
    }

    println!("\nudp with a scripted 1% drop schedule:");
    base.codec = CodecKind::Lcp;
    base.transport = TransportKind::Udp;
    base.inject_drops = true;
    let report = run_latency_bench(&base).expect("bench");
    println!(
        "{:8} | frames {:5}/{:5} | seq gaps detected {}",
        "lcp",
        report.frames_received,
        report.frames_published,
        report.seq_gaps,
    );
}
