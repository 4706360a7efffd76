"""
Tests for control-flow graph construction
"""

import unittest
from pathlib import Path
import sys

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from fpi.cfg import (
    FF, TT, NodeKind, avoids, build_cfg, collapse_loops, def_uses, post_dominators,
    reachable_via, reaches, to_dot, uncollapse_loop,
)
from fpi.lang.ast import Counter
from fpi.lang.parser import parse_program, parse_stmts
from fpi.peel import peel_all_loops
from fpi.rename import rename

CORPUS = Path(__file__).parent.parent / "corpus"

SS_SOURCE = (CORPUS / "safe" / "ss.fpi").read_text(encoding="utf-8")


def ss_cfg():
    triple = parse_program(SS_SOURCE)
    return build_cfg(triple.prog)


class TestBuildCfg(unittest.TestCase):
    """Node numbering and edges."""

    def test_ss_node_order(self):
        cfg = ss_cfg()
        self.assertEqual(cfg.start, 0)
        self.assertEqual(cfg.end, 11)
        self.assertEqual(cfg.nodes[1].kind, NodeKind.ASSIGN)
        self.assertEqual(sorted(cfg.loops), [2, 5, 8])
        for head, body, incr in ((2, 3, 4), (5, 6, 7), (8, 9, 10)):
            with self.subTest(head=head):
                self.assertEqual(cfg.nodes[head].kind, NodeKind.HEAD)
                self.assertEqual(cfg.loops[head].body, frozenset({body}))
                self.assertEqual(cfg.loops[head].incr, incr)
                self.assertEqual(cfg.nodes[body].loop, head)

    def test_ss_back_edges(self):
        self.assertEqual(ss_cfg().back_edges(), {(4, 2), (7, 5), (10, 8)})

    def test_loop_exits_chain(self):
        cfg = ss_cfg()
        self.assertEqual([cfg.loops[h].exit for h in (2, 5, 8)], [5, 8, 11])
        self.assertIn((2, 3, TT), cfg.edges)
        self.assertIn((2, 5, FF), cfg.edges)

    def test_def_uses_of_array_store(self):
        du = ss_cfg().def_uses(6)
        self.assertEqual(du.defs, frozenset({"A"}))
        self.assertEqual(du.uses, frozenset({"A", "S"}))
        self.assertEqual(du.def_index["A"], Counter("j"))
        self.assertEqual(du.use_indices["A"], (Counter("j"),))

    def test_parameter_counts_as_use(self):
        du = def_uses(parse_stmts("x = N + 1;").stmts[0])
        self.assertEqual(du.uses, frozenset({"N"}))

    def test_branch_guards(self):
        cfg = build_cfg(parse_stmts("if (x > 0) { y = 1; } else { y = 2; } z = y;"))
        branch = cfg.nodes[1]
        self.assertEqual(branch.kind, NodeKind.BRANCH)
        self.assertTrue(cfg.nodes[2].guards[0][1])
        self.assertFalse(cfg.nodes[3].guards[0][1])
        self.assertEqual(cfg.predecessors(4), [2, 3])

    def test_reachable_via_restricts_intermediate_nodes(self):
        cfg = ss_cfg()
        self.assertTrue(reachable_via(cfg, 1, 3, {2}))
        self.assertFalse(reachable_via(cfg, 1, 3, set()))
        # a path needs at least one edge
        self.assertFalse(reachable_via(cfg, 3, 3, set()))
        self.assertTrue(reachable_via(cfg, 3, 3, {4, 2}))
        self.assertFalse(reachable_via(cfg, 3, 6, {4, 2}))

    def test_reachable_via_on_peeled_ss(self):
        peeled = peel_all_loops(rename(parse_program(SS_SOURCE)).triple.prog)
        cfg = peeled.cfg
        # 7: A1[j] = A[j] + S   12: S1 = S1 + A1[k]
        self.assertFalse(reachable_via(cfg, 12, 7, cfg.nodes))
        self.assertTrue(reachable_via(cfg, 7, 12, cfg.nodes))

    def test_reachability(self):
        cfg = ss_cfg()
        self.assertFalse(reaches(cfg, 6, 3))
        self.assertTrue(reaches(cfg, 3, 3))
        self.assertTrue(reaches(cfg, 1, 9))
        self.assertTrue(avoids(cfg, 1, 9, 5))


class TestCollapse(unittest.TestCase):
    """Loop collapsing and post-dominators."""

    def test_collapse_hides_bodies(self):
        collapsed = collapse_loops(ss_cfg())
        self.assertEqual(set(collapsed.nodes), {0, 1, 2, 5, 8, 11})
        self.assertEqual(collapsed.nodes[5].kind, NodeKind.LOOP)
        self.assertEqual(collapsed.back_edges(), set())
        self.assertEqual(collapsed.successors(2), [5])

    def test_uncollapse_restores_one_loop(self):
        cfg = uncollapse_loop(collapse_loops(ss_cfg()), 5)
        self.assertIn(6, cfg.nodes)
        self.assertNotIn(3, cfg.nodes)
        self.assertEqual(cfg.back_edges(), {(7, 5)})

    def test_post_dominators(self):
        cfg = build_cfg(parse_stmts("if (x > 0) { y = 1; } else { y = 2; } z = y;"))
        ipdom = post_dominators(cfg)
        self.assertEqual(ipdom[1], 4)
        self.assertEqual(ipdom[2], 4)
        self.assertEqual(ipdom[4], cfg.end)

    def test_dot_output(self):
        text = to_dot(ss_cfg(), [(1, 3)])
        self.assertTrue(text.startswith("digraph cfg {"))
        self.assertIn('n4 -> n2', text)
        self.assertIn("n1 -> n3 [style=dashed", text)


if __name__ == '__main__':
    unittest.main()
