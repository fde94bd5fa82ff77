//! Backpropagated gradients against central finite differences.

use lhessian::network::{ActivationKind, Network};
use lhessian::rng::Rng64;
use lhessian::training::{backprop, LossKind, Target};

fn main() -> lhessian::Result<()> {
    let mut rng = Rng64::new(21);
    let net = Network::init(&[3, 5, 2], &[ActivationKind::Sigmoid, ActivationKind::Identity], 1.0, &mut rng)?;
    let x = [0.3, -1.1, 0.6];
    let target = Target::Class(1);
    let (_, grads) = backprop(&net, &x, target, LossKind::CrossEntropy)?;

    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for (b, g) in grads.iter().enumerate() {
        let base = net.blocks()[b].params();
        for (i, &gi) in g.iter().enumerate() {
            let eval = |delta: f64| -> lhessian::Result<f64> {
                let mut n = net.clone();
                let mut p = base.clone();
                p[i] += delta;
                n.blocks_mut()[b].set_params(&p)?;
                Ok(backprop(&n, &x, target, LossKind::CrossEntropy)?.0)
            };
            let fd = (eval(h)? - eval(-h)?) / (2.0 * h);
            worst = worst.max((fd - gi).abs());
        }
    }
    println!("largest backprop vs finite-difference gap: {worst:.2e}");
    Ok(())
}
