//! Random AST fact bases shaped like a parser's output for class
//! definitions, for oracle testing and benchmarking.

use rand::Rng;
use setrules_core::{Constant, Database, Tuple};

#[derive(Clone, Copy, Debug)]
pub struct SynthShape {
    pub max_classes: usize,
    pub max_bases: usize,
    /// Chance that a class reuses the previous class's name.
    pub name_reuse: f64,
    /// Allow base names that form extension cycles.
    pub cycles: bool,
}

impl Default for SynthShape {
    fn default() -> Self {
        SynthShape {
            max_classes: 40,
            max_bases: 3,
            name_reuse: 0.1,
            cycles: false,
        }
    }
}

struct Emitter {
    db: Database,
    next_id: i64,
}

impl Emitter {
    fn id(&mut self) -> Constant {
        self.next_id += 1;
        Constant::Int(self.next_id)
    }

    fn fact(&mut self, pred: &str, args: Vec<Constant>) {
        self.db.assert_facts(pred, [Tuple::new(args)]).expect("fixed arities");
    }

    fn list(&mut self, elems: &[Constant]) -> Constant {
        let list = self.id();
        for (i, &e) in elems.iter().enumerate() {
            self.fact("Member", vec![list, e, Constant::Int(i as i64)]);
        }
        list
    }

    fn name_node(&mut self, name: Constant) -> Constant {
        let id = self.id();
        let load = self.id();
        self.fact("Load", vec![load]);
        self.fact("Name", vec![id, name, load]);
        id
    }
}

/// A fact base with `ClassDef/6`, `Name/3` and `Member/3` facts plus nodes
/// the analysis ignores (`Module`, `Attribute`, `Pass`, `Load`).
///
/// Class names are ranked; without `cycles` a class only names bases of
/// strictly lower rank, so the extension relation is acyclic even when
/// names repeat. Some bases are attribute expressions or names of classes
/// not defined in the fact base.
pub fn random_fact_base<R: Rng>(rng: &mut R, shape: &SynthShape) -> Database {
    let mut e = Emitter {
        db: Database::new(),
        next_id: 0,
    };
    let n = rng.gen_range(0..=shape.max_classes);
    let external = [Constant::sym("object"), Constant::sym("Exception")];
    let mut ranks: Vec<usize> = Vec::with_capacity(n);
    let mut body = Vec::new();
    for _ in 0..n {
        let rank = match ranks.last() {
            Some(&last) if rng.gen_bool(shape.name_reuse) => last,
            Some(&last) => last + 1,
            None => 0,
        };
        ranks.push(rank);
        let name = Constant::sym(&format!("C{rank}"));
        let mut bases = Vec::new();
        for _ in 0..rng.gen_range(0..=shape.max_bases) {
            let node = match rng.gen_range(0..10) {
                0 => {
                    let id = e.id();
                    let value = e.name_node(Constant::sym("module"));
                    let load = e.id();
                    e.fact("Attribute", vec![id, value, Constant::sym("Base"), load]);
                    id
                }
                1 => {
                    let pick = external[rng.gen_range(0..external.len())];
                    e.name_node(pick)
                }
                _ if shape.cycles && n > 0 => {
                    let target = rng.gen_range(0..=ranks.last().copied().unwrap_or(0) + 1);
                    e.name_node(Constant::sym(&format!("C{target}")))
                }
                _ if rank > 0 => {
                    let target = rng.gen_range(0..rank);
                    e.name_node(Constant::sym(&format!("C{target}")))
                }
                _ => continue,
            };
            bases.push(node);
        }
        let id = e.id();
        let base_list = e.list(&bases);
        let keywords = e.list(&[]);
        let pass = e.id();
        e.fact("Pass", vec![pass]);
        let class_body = e.list(&[pass]);
        let decorators = e.list(&[]);
        e.fact("ClassDef", vec![id, name, base_list, keywords, class_body, decorators]);
        body.push(id);
    }
    let module = e.id();
    let module_body = e.list(&body);
    e.fact("Module", vec![module, module_body]);
    e.db
}
