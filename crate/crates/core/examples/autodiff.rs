//! Reverse-mode gradients checked against central differences, then a
//! least-squares fit with Adam.

use argdialog::tensor::{Adam, Tensor};

fn loss(w: &Tensor, x: &Tensor) -> Tensor {
    x.matmul(w).unwrap().tanh().softmax(1).unwrap().cross_entropy(1).unwrap()
}

fn main() {
    let x = Tensor::matrix(&[vec![0.3, -1.2, 0.5], vec![1.1, 0.4, -0.7]]).unwrap();
    let w = Tensor::param(vec![0.2, -0.1, 0.4, 0.3, -0.5, 0.1], &[3, 2]).unwrap();

    loss(&w, &x).backward().unwrap();
    let analytic = w.grad().unwrap();
    let h = 1e-5;
    for (i, g) in analytic.iter().enumerate() {
        let at = |d: f64| {
            let mut v = w.to_vec();
            v[i] += d;
            loss(&Tensor::new(v, &[3, 2]).unwrap(), &x).item()
        };
        let numeric = (at(h) - at(-h)) / (2.0 * h);
        println!("dL/dw[{i}] analytic {g:+.8} numeric {numeric:+.8}");
    }

    // y = 2a - 3b + 1
    let inputs = Tensor::matrix(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![2.0, -1.0]]).unwrap();
    let target = [3.0, -2.0, 0.0, 8.0];
    let w = Tensor::param(vec![0.0, 0.0], &[2, 1]).unwrap();
    let b = Tensor::param(vec![0.0], &[1]).unwrap();
    let mut adam = Adam::new(&[w.clone(), b.clone()]);
    for step in 0..=2000 {
        w.zero_grad();
        b.zero_grad();
        let pred = inputs.matmul(&w).unwrap().add_bias(&b).unwrap();
        let err = pred.sub(&Tensor::new(target.to_vec(), &[4, 1]).unwrap()).unwrap();
        let mse = err.mul(&err).unwrap().mean();
        mse.backward().unwrap();
        adam.step(&[w.clone(), b.clone()], 0.05).unwrap();
        if step % 500 == 0 {
            println!("step {step:4} mse {:.6}", mse.item());
        }
    }
    println!("w = {:.3?}, b = {:.3}", w.to_vec(), b.get(0));
}
