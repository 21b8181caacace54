use jugglesim::config::ScenarioConfig;
use jugglesim::env::{EpisodeMode, JuggleEnv, ResetOverrides};
use jugglesim::mbpp::MbppController;

fn main() {
    let mut config = ScenarioConfig::default();
    config.domain_randomization.randomize_restitution = false;
    let mut env = JuggleEnv::new(&config, EpisodeMode::Eval, 1234, 0);
    env.set_overrides(ResetOverrides { release_height: Some(4.25), restitution: None });
    env.reset();
    let mut controller = MbppController::new(&config);
    controller.reset();
    let normalizer = *env.normalizer();
    println!("accel bound {:.2}", controller.accel_bound());
    let mut hit_flag = false;
    for step in 0..1200 {
        let quad = *env.quad_state();
        let ball = env.ball_state().position;
        let ball_v = env.ball_state().velocity;
        let cmd = controller.command(&quad, ball, hit_flag);
        let raw = normalizer.to_raw(&cmd);
        match env.step(raw) {
            Ok(out) => {
                hit_flag = !out.hits.is_empty();
                if hit_flag {
                    let h = &out.hits[0];
                    println!("t={:6.2} HIT at z={:.3} d_axis={:.3} vin={:.2} vout={:.2} vr={:.2} valid={} quad=({:.2},{:.2},{:.2})",
                        env.time(), h.contact_point.z, h.d_axis, h.pre_velocity.z, h.post_velocity.z, h.racket_velocity.z, h.hit_valid,
                        quad.position.x, quad.position.y, quad.position.z);
                }
                if let Some(a) = out.apex {
                    println!("t={:6.2} APEX z={:.3} valid={}", env.time(), a.z_apex, a.apex_valid);
                }
                if step % 25 == 0 {
                    println!("t={:6.2} quad=({:+.2},{:+.2},{:.2}) vz={:+.2} ball=({:+.2},{:+.2},{:.2}) bvz={:+.2}",
                        env.time(), quad.position.x, quad.position.y, quad.position.z, quad.velocity.z,
                        ball.x, ball.y, ball.z, ball_v.z);
                }
                if let Some(r) = out.terminated {
                    println!("t={:6.2} TERMINATED {:?} ball z={:.3}", env.time(), r, env.ball_state().position.z);
                    break;
                }
                if out.truncated { println!("truncated"); break; }
            }
            Err(e) => { println!("err {e}"); break; }
        }
    }
    println!("consecutive hits: {}", env.episode_state().max_consecutive_hits);
    let n = controller.decisions.len();
    for d in controller.decisions.iter().take(40) {
        println!("decision t={:.2} feasible={} t_hit={:?} peak={:.1}", d.time, d.feasible, d.t_hit, d.peak_accel);
    }
    println!("({} decisions total)", n);
}
