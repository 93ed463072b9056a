//! Builds a small conv, pool and bilinear graph on the tape, runs backward,
//! and compares one gradient entry with a central difference.

use mgg::basenet::{BaseNet, BaseNetConfig};
use mgg::params::{Binding, ParamInit, ParamStore};
use mgg::seqgrad::Graph;
use ndarray::Array2;

fn loss(net: &BaseNet, store: &ParamStore<f64>, trainable: bool) -> (f64, Option<f64>) {
    let mut g = Graph::new();
    let mut b = if trainable { Binding::new(store) } else { Binding::frozen(store) };
    let x = b.var(&mut g, "x").unwrap();
    let t = net.forward_full(&mut g, &mut b, x).unwrap();
    let p = g.maxpool1d(t, 2, 2).unwrap();
    let s = g.sigmoid(p).unwrap();
    let out = g.sum(s).unwrap();
    let value = g.scalar(out);
    if !trainable {
        return (value, None);
    }
    g.backward(out).unwrap();
    let grads = b.gradients(&g);
    (value, Some(grads["basenet.conv1.weight"][[0, 0]]))
}

fn main() {
    let net = BaseNet::new(4, &BaseNetConfig { hidden: 8, kernel: 3, rank: 4 }, true).unwrap();
    let mut store = ParamStore::new();
    net.register(&mut store, &mut ParamInit::new(1)).unwrap();
    store.insert("x", Array2::from_shape_fn((16, 4), |(t, c)| ((t * 4 + c) as f64 * 0.37).sin())).unwrap();
    println!("parameters: {}", store.names().collect::<Vec<_>>().join(", "));

    let (value, grad) = loss(&net, &store, true);
    let h = 1e-5;
    let mut bumped = store.clone();
    bumped.get_mut("basenet.conv1.weight").unwrap()[[0, 0]] += h;
    let (plus, _) = loss(&net, &bumped, false);
    bumped.get_mut("basenet.conv1.weight").unwrap()[[0, 0]] -= 2.0 * h;
    let (minus, _) = loss(&net, &bumped, false);
    println!("loss {value:.6}");
    println!("d loss / d w[0,0]: backward {:.8}, central difference {:.8}", grad.unwrap(), (plus - minus) / (2.0 * h));
}
