// Scratch diagnostics; not part of the deliverable surface.
use akf_sr::{Agent, AgentConfig, Env, Pendulum, ScaledRewardEnv};

fn main() {
    let cfg = AgentConfig::pendulum_default();
    let seed = 3u64;
    let mut env = Pendulum::new(seed, false);
    let mut agent = Agent::new(&cfg, seed).unwrap();
    let pre = agent.train(&mut env, 300).unwrap();
    let floor: f64 = pre[250..].iter().map(|e| e.q_loss).sum::<f64>() / 50.0;
    let pre_steps: f64 = pre[250..].iter().map(|e| e.steps as f64).sum::<f64>() / 50.0;
    let pre_r: f64 = pre[250..].iter().map(|e| e.reward_mse).sum::<f64>() / 50.0;
    let pre_s: f64 = pre[250..].iter().map(|e| e.sr_mse).sum::<f64>() / 50.0;
    println!("pre: floor={floor:.4} (r={pre_r:.4} s={pre_s:.4}) steps={pre_steps:.0}");

    let theta_pre = agent.theta().clone();
    let mut adapted = agent.clone();
    let mut scaled = ScaledRewardEnv::new(Box::new(Pendulum::new(seed + 1000, false)), 3.0);
    for block in 0..10 {
        let log = adapted.adapt_reward_change(&mut scaled, 10, true).unwrap();
        let r: f64 = log.iter().map(|e| e.reward_mse).sum::<f64>() / 10.0;
        let s: f64 = log.iter().map(|e| e.sr_mse).sum::<f64>() / 10.0;
        let st: f64 = log.iter().map(|e| e.steps as f64).sum::<f64>() / 10.0;
        let dev = {
            let expect = &theta_pre * 3.0;
            let num: f64 = (adapted.theta() - &expect).iter().map(|v| v * v).sum::<f64>().sqrt();
            let den: f64 = expect.iter().map(|v| v * v).sum::<f64>().sqrt();
            num / den
        };
        println!(
            "adapt ep {:>3}: r_mse={r:.4} sr_mse={s:.4} q={:.4} steps={st:.0} |theta-3theta0|/|3theta0|={dev:.3}",
            (block + 1) * 10,
            r + s
        );
    }
}
