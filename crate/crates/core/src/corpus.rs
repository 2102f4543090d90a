//! Small benchmark systems: handcrafted families and a seeded random AIG
//! generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aiger::{parse_aag, TransitionSystem};
use crate::logic::Lit;

const FALSE: Lit = Lit(0);

/// Incremental AIG construction. Inputs take the lowest variables, latches
/// follow, gates come last.
#[derive(Debug, Clone)]
pub struct AigBuilder {
    num_inputs: u32,
    num_latches: u32,
    next: Vec<Lit>,
    gates: Vec<(Lit, Lit, Lit)>,
}

impl AigBuilder {
    pub fn new(num_inputs: usize, num_latches: usize) -> AigBuilder {
        AigBuilder {
            num_inputs: num_inputs as u32,
            num_latches: num_latches as u32,
            next: vec![FALSE; num_latches],
            gates: Vec::new(),
        }
    }

    pub fn input(&self, i: usize) -> Lit {
        assert!((i as u32) < self.num_inputs);
        Lit(2 * (i as u32 + 1))
    }

    pub fn latch(&self, i: usize) -> Lit {
        assert!((i as u32) < self.num_latches);
        Lit(2 * (self.num_inputs + i as u32 + 1))
    }

    pub fn constant(&self, value: bool) -> Lit {
        if value {
            !FALSE
        } else {
            FALSE
        }
    }

    pub fn and(&mut self, a: Lit, b: Lit) -> Lit {
        let out = Lit(2 * (self.num_inputs + self.num_latches + self.gates.len() as u32 + 1));
        self.gates.push((out, a, b));
        out
    }

    pub fn or(&mut self, a: Lit, b: Lit) -> Lit {
        !self.and(!a, !b)
    }

    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        let x = self.and(a, !b);
        let y = self.and(!a, b);
        self.or(x, y)
    }

    pub fn and_all(&mut self, lits: &[Lit]) -> Lit {
        lits.iter().fold(!FALSE, |acc, &l| if acc == !FALSE { l } else { self.and(acc, l) })
    }

    pub fn set_next(&mut self, latch: usize, next: Lit) {
        self.next[latch] = next;
    }

    pub fn num_gates(&self) -> usize {
        self.gates.len()
    }

    pub fn to_aag(&self, bad: Lit) -> String {
        let max_var = self.num_inputs + self.num_latches + self.gates.len() as u32;
        let mut out = format!("aag {} {} {} 1 {}\n", max_var, self.num_inputs, self.num_latches, self.gates.len());
        for i in 0..self.num_inputs as usize {
            out += &format!("{}\n", self.input(i).code());
        }
        for (i, n) in self.next.iter().enumerate() {
            out += &format!("{} {}\n", self.latch(i).code(), n.code());
        }
        out += &format!("{}\n", bad.code());
        for (o, a, b) in &self.gates {
            out += &format!("{} {} {}\n", o.code(), a.code(), b.code());
        }
        out
    }

    pub fn build(&self, bad: Lit) -> TransitionSystem {
        parse_aag(&self.to_aag(bad)).expect("builder output is well-formed")
    }
}

/// `n`-bit binary counter with an optional enable input.
pub fn counter(bits: usize, enable: bool) -> AigBuilder {
    let mut b = AigBuilder::new(enable as usize, bits);
    let mut carry = if enable { b.input(0) } else { b.constant(true) };
    for i in 0..bits {
        let l = b.latch(i);
        let n = b.xor(l, carry);
        b.set_next(i, n);
        carry = b.and(carry, l);
    }
    b
}

pub fn counter_value(b: &mut AigBuilder, bits: usize, value: u64) -> Lit {
    let lits: Vec<Lit> = (0..bits).map(|i| b.latch(i).xor(value >> i & 1 == 0)).collect();
    b.and_all(&lits)
}

/// Counter that wraps from `modulus - 1` to 0; bad when it shows `bad_value`.
pub fn modulo_counter(bits: usize, modulus: u64, bad_value: u64) -> TransitionSystem {
    let mut b = AigBuilder::new(0, bits);
    let wrap = counter_value(&mut b, bits, modulus - 1);
    let mut carry = b.constant(true);
    for i in 0..bits {
        let l = b.latch(i);
        let n = b.xor(l, carry);
        let n = b.and(n, !wrap);
        b.set_next(i, n);
        carry = b.and(carry, l);
    }
    let bad = counter_value(&mut b, bits, bad_value);
    b.build(bad)
}

/// Shift register fed by an input; bad when all cells hold 1.
pub fn shift_register(len: usize) -> TransitionSystem {
    let mut b = AigBuilder::new(1, len);
    b.set_next(0, b.input(0));
    for i in 1..len {
        b.set_next(i, b.latch(i - 1));
    }
    let cells: Vec<Lit> = (0..len).map(|i| b.latch(i)).collect();
    let bad = b.and_all(&cells);
    b.build(bad)
}

/// Two shift registers fed by the same input; bad when their outputs differ.
pub fn twin_shift_registers(len: usize) -> TransitionSystem {
    let mut b = AigBuilder::new(1, 2 * len);
    for r in 0..2 {
        b.set_next(r * len, b.input(0));
        for i in 1..len {
            b.set_next(r * len + i, b.latch(r * len + i - 1));
        }
    }
    let (x, y) = (b.latch(len - 1), b.latch(2 * len - 1));
    let bad = b.xor(x, y);
    b.build(bad)
}

/// One-hot token ring that starts empty and injects a token on request; bad
/// when two cells hold a token.
pub fn token_ring(len: usize) -> TransitionSystem {
    let mut b = AigBuilder::new(1, len + 1);
    let started = b.latch(len);
    b.set_next(len, !b.constant(false));
    let inject = b.and(b.input(0), !started);
    let first = b.or(inject, b.latch(len - 1));
    b.set_next(0, first);
    for i in 1..len {
        b.set_next(i, b.latch(i - 1));
    }
    let mut pairs = Vec::new();
    for i in 0..len {
        for j in i + 1..len {
            pairs.push(b.and(b.latch(i), b.latch(j)));
        }
    }
    let none = pairs.iter().fold(b.constant(true), |acc, &p| {
        if acc == b.constant(true) {
            !p
        } else {
            b.and(acc, !p)
        }
    });
    b.build(!none)
}

/// Disjoint union of `parts` whose bad signal is raised when any part's is.
pub fn product(parts: &[TransitionSystem]) -> TransitionSystem {
    let ni: usize = parts.iter().map(|p| p.num_inputs()).sum();
    let nl: usize = parts.iter().map(|p| p.num_latches()).sum();
    let mut b = AigBuilder::new(ni, nl);
    let (mut input_base, mut latch_base) = (0, 0);
    let mut bads = Vec::new();
    for p in parts {
        let mut map = vec![FALSE; p.max_var as usize + 1];
        for (i, l) in p.inputs.iter().enumerate() {
            map[l.var().index()] = b.input(input_base + i);
        }
        for (i, l) in p.latches.iter().enumerate() {
            map[l.lit.var().index()] = b.latch(latch_base + i);
        }
        let tr = |map: &[Lit], l: Lit| map[l.var().index()].xor(l.is_negated());
        for g in &p.gates {
            let out = b.and(tr(&map, g.a), tr(&map, g.b));
            map[g.out.var().index()] = out;
        }
        for (i, l) in p.latches.iter().enumerate() {
            b.set_next(latch_base + i, tr(&map, l.next));
        }
        bads.push(tr(&map, p.bad));
        input_base += p.num_inputs();
        latch_base += p.num_latches();
    }
    let none = bads.iter().map(|&l| !l).collect::<Vec<_>>();
    let all_good = b.and_all(&none);
    b.build(!all_good)
}

/// Named handcrafted systems: counters, shift registers, the three small
/// reference systems and a few safe designs that need propagation.
pub fn handcrafted() -> Vec<(String, TransitionSystem)> {
    let mut out = vec![
        ("toggle".to_string(), parse_aag("aag 1 0 1 1 0\n2 3\n2\n").unwrap()),
        ("and_input".to_string(), parse_aag("aag 3 1 1 1 1\n2\n4 6\n4\n6 4 2\n").unwrap()),
        ("never_bad".to_string(), parse_aag("aag 1 0 1 1 0\n2 3\n0\n").unwrap()),
    ];
    for bits in [2, 3, 4] {
        let mut b = counter(bits, false);
        let bad = counter_value(&mut b, bits, (1 << bits) - 1);
        out.push((format!("counter{bits}"), b.build(bad)));
    }
    let mut b = counter(3, true);
    let bad = counter_value(&mut b, 3, 5);
    out.push(("counter3_enable".to_string(), b.build(bad)));
    out.push(("mod10_counter_safe".to_string(), modulo_counter(4, 10, 12)));
    out.push(("mod10_counter_unsafe".to_string(), modulo_counter(4, 10, 9)));
    out.push(("mod6_counter_safe".to_string(), modulo_counter(3, 6, 7)));
    out.push(("shift4".to_string(), shift_register(4)));
    out.push(("twin_shift3".to_string(), twin_shift_registers(3)));
    out.push(("token_ring4".to_string(), token_ring(4)));
    out.push(("propagation_probe".to_string(), parse_aag(PROPAGATION_PROBE).unwrap()));
    out
}

/// Safe 12-latch system that the engine without propagation needs about
/// three times as many frames for as the other modes.
const PROPAGATION_PROBE: &str = "aag 37 1 12 1 24\n2\n4 44\n6 32\n8 3\n10 15\n12 47\n14 8\n16 35\n18 69\n\
20 46\n22 0\n24 26\n26 73\n74\n28 25 3\n30 10 21\n32 29 17\n34 15 23\n36 18 18\n38 9 32\n40 30 37\n42 12 27\n\
44 36 29\n46 41 26\n48 13 34\n50 17 44\n52 23 25\n54 26 47\n56 2 53\n58 14 40\n60 48 32\n62 52 23\n64 59 7\n\
66 33 39\n68 27 53\n70 54 4\n72 37 4\n74 47 20\n";

#[derive(Debug, Clone, Copy)]
pub struct RandomParams {
    pub max_latches: usize,
    pub max_inputs: usize,
    pub max_gates: usize,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams { max_latches: 8, max_inputs: 4, max_gates: 40 }
    }
}

/// Random AIG drawn from `seed`. The bad signal is a conjunction of a few
/// signals so that both verdicts occur.
pub fn random_system(seed: u64, params: RandomParams) -> TransitionSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nl = rng.gen_range(1..=params.max_latches);
    let ni = rng.gen_range(0..=params.max_inputs);
    let mut b = AigBuilder::new(ni, nl);
    let mut pool: Vec<Lit> = (0..ni).map(|i| b.input(i)).chain((0..nl).map(|i| b.latch(i))).collect();
    let budget = rng.gen_range(nl..=params.max_gates.max(nl)) * 3 / 4;
    let pick = |rng: &mut ChaCha8Rng, pool: &[Lit]| pool[rng.gen_range(0..pool.len())].xor(rng.gen_bool(0.5));
    while b.num_gates() < budget {
        let (x, y) = (pick(&mut rng, &pool), pick(&mut rng, &pool));
        let g = b.and(x, y);
        pool.push(g);
    }
    for i in 0..nl {
        let n = if rng.gen_bool(0.05) { b.constant(false) } else { pick(&mut rng, &pool) };
        b.set_next(i, n);
    }
    let width = rng.gen_range(1..=3);
    let mut bad = b.constant(true);
    for _ in 0..width {
        if b.num_gates() >= params.max_gates {
            break;
        }
        let l = pick(&mut rng, &pool);
        bad = if bad == b.constant(true) { l } else { b.and(bad, l) };
    }
    b.build(bad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{bfs_check, OracleLimits, OracleResult};

    #[test]
    fn handcrafted_verdicts() {
        let expect_safe = [
            "and_input",
            "never_bad",
            "mod10_counter_safe",
            "mod6_counter_safe",
            "twin_shift3",
            "token_ring4",
            "propagation_probe",
        ];
        for (name, sys) in handcrafted() {
            let r = bfs_check(&sys, OracleLimits::default());
            assert_eq!(matches!(r, OracleResult::Safe(_)), expect_safe.contains(&name.as_str()), "{name}: {r:?}");
        }
    }

    #[test]
    fn counter_lengths() {
        let systems = handcrafted();
        let len = |name: &str| {
            let sys = &systems.iter().find(|(n, _)| n == name).unwrap().1;
            match bfs_check(sys, OracleLimits::default()) {
                OracleResult::Unsafe(t) => t.len(),
                r => panic!("{r:?}"),
            }
        };
        assert_eq!(len("counter2"), 3);
        assert_eq!(len("counter3"), 7);
        assert_eq!(len("counter4"), 15);
        assert_eq!(len("mod10_counter_unsafe"), 9);
        assert_eq!(len("shift4"), 4);
    }

    #[test]
    fn random_systems_respect_bounds_and_mix_verdicts() {
        let p = RandomParams::default();
        let mut safe = 0;
        for seed in 0..200 {
            let sys = random_system(seed, p);
            assert!(sys.num_latches() <= 8 && sys.num_inputs() <= 4 && sys.gates.len() <= 40);
            if matches!(bfs_check(&sys, OracleLimits::default()), OracleResult::Safe(_)) {
                safe += 1;
            }
        }
        assert!((40..=160).contains(&safe), "{safe} safe of 200");
    }
}
