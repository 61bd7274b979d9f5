//! Def-use (`computedFrom`) edges between local variables.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ast::{NodeId, NodeKind, SyntaxTree};
use crate::scope::{analyze, BindingId, BindingKind, Role, ScopeInfo};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    ComputedFrom,
}

/// `(defined, relation, read)` triples over normalized variable ids.
///
/// Variable ids number the module's local (non-import) bindings in order
/// of their first declaration, so the set does not depend on names.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataflowEdgeSet {
    pub edges: BTreeSet<(u32, Relation, u32)>,
    pub var_count: u32,
}

impl DataflowEdgeSet {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, def: u32, read: u32) -> bool {
        self.edges.contains(&(def, Relation::ComputedFrom, read))
    }
}

struct Extractor<'a> {
    tree: &'a SyntaxTree,
    info: &'a ScopeInfo,
    var_of: Vec<Option<u32>>,
    edges: BTreeSet<(u32, Relation, u32)>,
}

pub fn dataflow_edges(tree: &SyntaxTree) -> DataflowEdgeSet {
    let info = analyze(tree);
    dataflow_edges_with(tree, &info)
}

pub fn dataflow_edges_with(tree: &SyntaxTree, info: &ScopeInfo) -> DataflowEdgeSet {
    let mut order: Vec<(usize, BindingId)> = info
        .bindings
        .iter()
        .enumerate()
        .filter(|(_, b)| b.kind != BindingKind::Import)
        .map(|(i, b)| (tree.span(b.decls[0]).start(), i as BindingId))
        .collect();
    order.sort_unstable();
    let mut var_of = vec![None; info.bindings.len()];
    for (n, &(_, b)) in order.iter().enumerate() {
        var_of[b as usize] = Some(n as u32);
    }
    let mut x = Extractor {
        tree,
        info,
        var_of,
        edges: BTreeSet::new(),
    };
    for id in tree.preorder() {
        x.node(id);
    }
    DataflowEdgeSet {
        edges: x.edges,
        var_count: order.len() as u32,
    }
}

impl<'a> Extractor<'a> {
    fn var(&self, ident: NodeId) -> Option<u32> {
        match self.info.role(ident) {
            Role::Decl(b) | Role::Ref(Some(b)) => self.var_of[b as usize],
            _ => None,
        }
    }

    /// Variables read in `node`, not descending into nested functions or
    /// classes.
    fn reads(&self, node: NodeId, out: &mut BTreeSet<u32>) {
        let t = self.tree;
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            match t.kind(n) {
                NodeKind::Identifier => {
                    if let Role::Ref(Some(b)) = self.info.role(n) {
                        if let Some(v) = self.var_of[b as usize] {
                            out.insert(v);
                        }
                    }
                }
                NodeKind::FunctionExpression
                | NodeKind::ArrowFunctionExpression
                | NodeKind::FunctionDeclaration
                | NodeKind::ClassExpression
                | NodeKind::ClassDeclaration => {}
                _ => stack.extend(t.children(n).iter().copied()),
            }
        }
    }

    /// Variables written by a pattern or assignment target. Default
    /// values inside the pattern are handled separately.
    fn targets(&self, node: NodeId, out: &mut Vec<u32>) {
        let t = self.tree;
        match t.kind(node) {
            NodeKind::Identifier => out.extend(self.var(node)),
            NodeKind::ObjectPattern => {
                for &p in t.children(node) {
                    match t.kind(p) {
                        NodeKind::Property => self.targets(t.children(p)[1], out),
                        _ => self.targets(p, out),
                    }
                }
            }
            NodeKind::ArrayPattern | NodeKind::RestElement => {
                for &c in t.children(node) {
                    self.targets(c, out);
                }
            }
            NodeKind::AssignmentPattern => self.targets(t.children(node)[0], out),
            _ => {}
        }
    }

    fn link(&mut self, target: NodeId, source: NodeId) {
        let mut defs = Vec::new();
        self.targets(target, &mut defs);
        if defs.is_empty() {
            return;
        }
        let mut reads = BTreeSet::new();
        self.reads(source, &mut reads);
        for &d in &defs {
            for &r in &reads {
                self.edges.insert((d, Relation::ComputedFrom, r));
            }
        }
    }

    fn node(&mut self, id: NodeId) {
        let t = self.tree;
        let kids = t.children(id);
        match t.kind(id) {
            NodeKind::VariableDeclarator if kids.len() == 2 => self.link(kids[0], kids[1]),
            NodeKind::AssignmentPattern => self.link(kids[0], kids[1]),
            NodeKind::AssignmentExpression => {
                self.link(kids[0], kids[1]);
                if t.attr(id) != Some("=") {
                    self.self_edge(kids[0]);
                }
            }
            NodeKind::UpdateExpression => self.self_edge(kids[0]),
            NodeKind::ForInStatement | NodeKind::ForOfStatement => {
                let left = kids[0];
                let target = if t.kind(left) == NodeKind::VariableDeclaration {
                    t.children(t.children(left)[0])[0]
                } else {
                    left
                };
                self.link(target, kids[1]);
            }
            _ => {}
        }
    }

    fn self_edge(&mut self, target: NodeId) {
        if self.tree.kind(target) == NodeKind::Identifier {
            if let Some(v) = self.var(target) {
                self.edges.insert((v, Relation::ComputedFrom, v));
            }
        }
    }
}
