use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::One;

use super::Value;
use crate::ast::BinaryTreeView;

/// A finite binary tree with concrete element values.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConcreteTree {
    Leaf,
    Node(Arc<ConcreteTree>, Value, Arc<ConcreteTree>),
}

impl ConcreteTree {
    pub fn node(l: ConcreteTree, e: Value, r: ConcreteTree) -> ConcreteTree {
        let t = ConcreteTree::Node(Arc::new(l), e, Arc::new(r));
        debug_assert!(t.size() % 2 == 1 && t.size() >= 2 * t.height() + 1);
        t
    }

    pub fn leaf() -> ConcreteTree {
        ConcreteTree::Leaf
    }

    /// Number of vertices, leaves included.
    pub fn size(&self) -> usize {
        match self {
            ConcreteTree::Leaf => 1,
            ConcreteTree::Node(l, _, r) => 1 + l.size() + r.size(),
        }
    }

    pub fn height(&self) -> usize {
        match self {
            ConcreteTree::Leaf => 0,
            ConcreteTree::Node(l, _, r) => 1 + l.height().max(r.height()),
        }
    }

    pub fn internal_nodes(&self) -> usize {
        (self.size() - 1) / 2
    }

    /// Element values in in-order.
    pub fn inorder(&self) -> Vec<Value> {
        let mut out = Vec::new();
        self.inorder_into(&mut out);
        out
    }

    fn inorder_into(&self, out: &mut Vec<Value>) {
        if let ConcreteTree::Node(l, e, r) = self {
            l.inorder_into(out);
            out.push(e.clone());
            r.inorder_into(out);
        }
    }

    pub fn shape(&self) -> Shape {
        match self {
            ConcreteTree::Leaf => Shape::SLeaf,
            ConcreteTree::Node(l, _, r) => Shape::SNode(Box::new(l.shape()), Box::new(r.shape())),
        }
    }

    pub fn to_value(&self, view: &BinaryTreeView) -> Value {
        match self {
            ConcreteTree::Leaf => Value::data(view.leaf.clone(), vec![]),
            ConcreteTree::Node(l, e, r) => {
                Value::data(view.node.clone(), vec![l.to_value(view), e.clone(), r.to_value(view)])
            }
        }
    }

    pub fn from_value(v: &Value, view: &BinaryTreeView) -> Option<ConcreteTree> {
        match v {
            Value::Data { ctor, fields } if *ctor == view.leaf && fields.is_empty() => Some(ConcreteTree::Leaf),
            Value::Data { ctor, fields } if *ctor == view.node && fields.len() == 3 => Some(ConcreteTree::node(
                Self::from_value(&fields[0], view)?,
                fields[1].clone(),
                Self::from_value(&fields[2], view)?,
            )),
            _ => None,
        }
    }

    /// The rotation `Node(Node(a, x, b), y, c) -> Node(a, x, Node(b, y, c))`
    /// at the root, if the root has that shape.
    pub fn rotate_right(&self) -> Option<ConcreteTree> {
        match self {
            ConcreteTree::Node(l, y, c) => match l.as_ref() {
                ConcreteTree::Node(a, x, b) => Some(ConcreteTree::node(
                    (**a).clone(),
                    x.clone(),
                    ConcreteTree::node((**b).clone(), y.clone(), (**c).clone()),
                )),
                ConcreteTree::Leaf => None,
            },
            ConcreteTree::Leaf => None,
        }
    }
}

impl fmt::Display for ConcreteTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConcreteTree::Leaf => f.write_str("Leaf"),
            ConcreteTree::Node(l, e, r) => write!(f, "(Node {l} {e} {r})"),
        }
    }
}

/// A tree with its elements erased.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    SLeaf,
    SNode(Box<Shape>, Box<Shape>),
}

impl Shape {
    pub fn size(&self) -> usize {
        match self {
            Shape::SLeaf => 1,
            Shape::SNode(l, r) => 1 + l.size() + r.size(),
        }
    }

    pub fn height(&self) -> usize {
        match self {
            Shape::SLeaf => 0,
            Shape::SNode(l, r) => 1 + l.height().max(r.height()),
        }
    }
}

/// All trees of each odd size up to `max_size`, grouped by size: index `k`
/// holds the trees of size `2k + 1`. Within a size the order is lexicographic
/// on (left subtree, element position in `domain`, right subtree), with
/// subtrees compared by their own position in this enumeration.
pub fn trees_by_size(max_size: usize, domain: &[Value]) -> Vec<Vec<ConcreteTree>> {
    let mut levels: Vec<Vec<ConcreteTree>> = Vec::new();
    if max_size == 0 {
        return levels;
    }
    levels.push(vec![ConcreteTree::Leaf]);
    let mut k = 1;
    while 2 * k < max_size {
        let mut level = Vec::new();
        // sizes: left 2i+1, right 2(k-1-i)+1
        for i in 0..k {
            for l in &levels[i] {
                for e in domain {
                    for r in &levels[k - 1 - i] {
                        level.push(ConcreteTree::node(l.clone(), e.clone(), r.clone()));
                    }
                }
            }
        }
        levels.push(level);
        k += 1;
    }
    levels
}

/// Every tree of size at most `max_size` over `domain`, each exactly once,
/// ordered by size and then lexicographically.
pub fn enumerate_trees(max_size: usize, domain: &[Value]) -> impl Iterator<Item = ConcreteTree> {
    trees_by_size(max_size, domain).into_iter().flatten()
}

/// All shapes of exactly `size` vertices.
pub fn enumerate_shapes(size: usize) -> Vec<Shape> {
    if size % 2 == 0 {
        return vec![];
    }
    let mut levels: Vec<Vec<Shape>> = vec![vec![Shape::SLeaf]];
    let k_max = (size - 1) / 2;
    for k in 1..=k_max {
        let mut level = Vec::new();
        for i in 0..k {
            for l in &levels[i] {
                for r in &levels[k - 1 - i] {
                    level.push(Shape::SNode(Box::new(l.clone()), Box::new(r.clone())));
                }
            }
        }
        levels.push(level);
    }
    levels.swap_remove(k_max)
}

/// The number of trees of height at most `h` over a single-element domain,
/// by `count_st(h) = count_st(h-1)^2 + 1`.
pub fn count_st(h: u32) -> BigUint {
    let mut c = BigUint::one();
    for _ in 0..h {
        c = &c * &c + BigUint::one();
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(xs: &[i64]) -> Vec<Value> {
        xs.iter().map(|&x| Value::Int(x)).collect()
    }

    #[test]
    fn tiny_enumerations() {
        let t: Vec<_> = enumerate_trees(1, &ints(&[7])).collect();
        assert_eq!(t, vec![ConcreteTree::Leaf]);
        let t: Vec<_> = enumerate_trees(3, &ints(&[1, 2])).collect();
        assert_eq!(t.len(), 3);
        assert_eq!(t[1], ConcreteTree::node(ConcreteTree::Leaf, Value::Int(1), ConcreteTree::Leaf));
        assert_eq!(enumerate_trees(5, &ints(&[1, 2])).count(), 11);
    }

    #[test]
    fn size_and_height_laws() {
        for t in enumerate_trees(9, &ints(&[0, 1])) {
            let s = t.size();
            assert_eq!(s % 2, 1);
            assert!(s >= 2 * t.height() + 1);
            assert_eq!(t.internal_nodes(), (s - 1) / 2);
            assert_eq!(t.shape().size(), s);
        }
    }

    #[test]
    fn figure_tree_shape() {
        let l = ConcreteTree::node(ConcreteTree::Leaf, Value::Int(1), ConcreteTree::Leaf);
        let t = ConcreteTree::node(l, Value::Int(2), ConcreteTree::Leaf);
        let want = Shape::SNode(
            Box::new(Shape::SNode(Box::new(Shape::SLeaf), Box::new(Shape::SLeaf))),
            Box::new(Shape::SLeaf),
        );
        assert_eq!(t.shape(), want);
        assert_eq!(ConcreteTree::Leaf.shape(), Shape::SLeaf);
    }

    #[test]
    fn count_st_sequence() {
        let got: Vec<String> = (0..6).map(|h| count_st(h).to_string()).collect();
        assert_eq!(got, ["1", "2", "5", "26", "677", "458330"]);
    }

    #[test]
    fn count_st_matches_enumeration() {
        // trees of height <= h over a unit domain
        for h in 0..=3u32 {
            let max_size = 2usize.pow(h + 1) - 1;
            let n = enumerate_trees(max_size, &ints(&[0])).filter(|t| t.height() <= h as usize).count();
            assert_eq!(BigUint::from(n), count_st(h));
        }
    }
}
