#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

#include <future>

using namespace pwhile;
using namespace testsupport;

namespace {
const CostModel cm = CostModel::calibrated();
}

TEST_CASE("stratification by height") {
    TimedTree t1 = ref_tree_1();
    Stratified s = stratify(t1, t1);
    REQUIRE(s.max_height == 3);
    for (int h = 0; h <= 3; ++h) CHECK(s.layers[h][0].size() == 1); // a chain: one node per layer

    TimedTree t2 = ref_tree_2();
    // oracle: recompute heights as longest distance to a leaf
    for (size_t n = 0; n < t2.nodes.size(); ++n)
        CHECK(node_heights(t2)[n] == oracle_height(t2, static_cast<int>(n)));
    Stratified s2 = stratify(t1, t2);
    CHECK(s2.layers[1][1].size() == 2); // the two nodes one step above a leaf

    TreeBuilder b;
    b.node(0);
    TimedTree leaf = b.done();
    Stratified s3 = stratify(leaf, leaf);
    CHECK(s3.max_height == 0);
    CHECK(s3.layers.size() == 1);
}

TEST_CASE("refinement lumps bisimilar roots") {
    TimedTree t1 = ref_tree_1(), t3 = ref_tree_3(), t4 = ref_tree_4();
    Partition p14 = refine(t1, t4);
    CHECK(p14.root_block(0) == p14.root_block(1));

    Partition p13 = refine(t1, t3);
    CHECK(p13.root_block(0) != p13.root_block(1));

    Partition self = refine(t3, t3);
    CHECK(self.root_block(0) == self.root_block(1));
}

TEST_CASE("joint distributions of the two example systems") {
    TimedTree left = joint_example_left(), right = joint_example_right();
    Partition part = refine(left, right);

    // the leaves form two blocks, one per class label
    int filled = -1, hollow = -1;
    for (size_t b = 0; b < part.blocks.size(); ++b) {
        if (part.blocks[b].height != 0) continue;
        if (env_str(part.blocks[b].label) == "{class=1}") filled = static_cast<int>(b);
        if (env_str(part.blocks[b].label) == "{class=0}") hollow = static_cast<int>(b);
    }
    REQUIRE(filled >= 0);
    REQUIRE(hollow >= 0);

    JointDist x1 = chi(part, {0, left.root});
    JointDist expected1{{{Rat(1), hollow}, Rat(1, 4)},
                        {{Rat(2), hollow}, Rat(1, 4)},
                        {{Rat(1), filled}, Rat(1, 4)},
                        {{Rat(2), filled}, Rat(1, 4)}};
    CHECK(x1 == expected1);

    JointDist x2 = chi(part, {1, right.root});
    JointDist expected2{{{Rat(2), filled}, Rat(1, 2)}, {{Rat(1), hollow}, Rat(1, 2)}};
    CHECK(x2 == expected2);

    // equal marginals over time and over classes
    std::map<Rat, Rat> time1, time2;
    std::map<int, Rat> class1, class2;
    for (const auto& [k, p] : x1) {
        time1[k.first] += p;
        class1[k.second] += p;
    }
    for (const auto& [k, p] : x2) {
        time2[k.first] += p;
        class2[k.second] += p;
    }
    CHECK(time1 == time2);
    CHECK(class1 == class2);
    CHECK(time1.at(Rat(1)) == Rat(1, 2));
    CHECK(time1.at(Rat(2)) == Rat(1, 2));

    // a leaf has the empty joint distribution
    CHECK(chi(part, {0, 1}).empty());

    // the systems are nevertheless distinguishable; oracle: evaluate the
    // supremum gap over the four (time, class) cells by hand
    Rat oracle = 0;
    for (const auto& cell : {std::pair<Rat, int>{Rat(1), hollow}, {Rat(2), hollow},
                             {Rat(1), filled}, {Rat(2), filled}}) {
        auto get = [&](const JointDist& d) {
            auto it = d.find(cell);
            return it == d.end() ? Rat(0) : it->second;
        };
        Rat diff = get(x1) - get(x2);
        if (diff < 0) diff = -diff;
        if (diff > oracle) oracle = diff;
    }
    CHECK(oracle == Rat(1, 4));
    DeltaResult d = delta(left, right, Uniform{});
    CHECK(d.value == oracle);
    CHECK(verify_witness(left, right, Uniform{}, d));
}

TEST_CASE("delta golden table on the four reference trees") {
    auto trees = ref_trees();
    Rat expected[4][4] = {
        {Rat(0), Rat(1, 2), Rat(1), Rat(0)},
        {Rat(1, 2), Rat(0), Rat(1), Rat(1, 2)},
        {Rat(1), Rat(1), Rat(0), Rat(1)},
        {Rat(0), Rat(1, 2), Rat(1), Rat(0)},
    };
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            DeltaResult d = delta(trees[i], trees[j], Uniform{});
            INFO("pair " << i + 1 << "," << j + 1);
            CHECK(d.value == expected[i][j]);
            CHECK(verify_witness(trees[i], trees[j], Uniform{}, d));
        }
}

TEST_CASE("class-weighted values on the four reference trees") {
    // Frozen values of the implemented weighting convention: the pairs
    // distinguishable already below the roots score the same 1/2 here as the
    // root-level pairs; the published example table prints smaller values
    // (1/4, 1/8) that no convention consistent with the case-study tables
    // reproduces. The acceptance suite reports the discrepancy.
    auto trees = ref_trees();
    Rat expected[4][4] = {
        {Rat(0), Rat(1, 2), Rat(1, 2), Rat(0)},
        {Rat(1, 2), Rat(0), Rat(1, 2), Rat(1, 2)},
        {Rat(1, 2), Rat(1, 2), Rat(0), Rat(1, 2)},
        {Rat(0), Rat(1, 2), Rat(1, 2), Rat(0)},
    };
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            DeltaResult d = delta_prime(trees[i], trees[j]);
            INFO("pair " << i + 1 << "," << j + 1);
            CHECK(d.value == expected[i][j]);
            CHECK(verify_witness(trees[i], trees[j], ClassMatch{}, d));
        }
}

TEST_CASE("key-to-key class-weighted distances at one half") {
    Program pagat = substitute_param(load_sample("pagat.pw"), Rat(1, 2));
    auto lows = low_vars(pagat);
    auto tree_for = [&](const std::string& bits) {
        auto t = build_tree(pagat, case_study_env(bits), cm);
        REQUIRE(t.ok());
        return collapse(t.value(), lows);
    };
    TimedTree t000 = tree_for("000");
    CHECK(delta_prime(t000, tree_for("100")).value == Rat(1, 2));
    CHECK(delta_prime(t000, tree_for("010")).value == Rat(1, 4));
    CHECK(delta_prime(t000, tree_for("001")).value == Rat(1, 8));
    CHECK(delta_prime(t000, tree_for("011")).value == Rat(1, 8));
    CHECK(delta_prime(t000, tree_for("110")).value == Rat(1, 4));
    CHECK(delta_prime(t000, t000).value == 0);
}

TEST_CASE("trees of different heights are maximally distinguishable") {
    TreeBuilder b;
    int r = b.node(0), l = b.node(0);
    b.edge(r, l, 1, 1);
    TimedTree chain2 = b.done();
    TreeBuilder b2;
    b2.node(0);
    TimedTree leaf = b2.done();
    DeltaResult d = delta(chain2, leaf, Uniform{});
    CHECK(d.value == 1);
    REQUIRE(d.witness.has_value());
    CHECK(d.witness->unmatched);
    CHECK(verify_witness(chain2, leaf, Uniform{}, d));
    CHECK(delta_prime(chain2, leaf).value == 1);
}

TEST_CASE("label mismatch dominates") {
    TreeBuilder b;
    b.node(0);
    TimedTree zero = b.done();
    TreeBuilder b2;
    b2.node(1);
    TimedTree one = b2.done();
    CHECK(delta(zero, one, Uniform{}).value == 1);
    CHECK(delta_prime(zero, one).value == 1);
}

TEST_CASE("duration-rescaled weights") {
    // two one-step trees distinguishable only by probabilities on duration-1
    // edges: a weight function vanishing at 1 hides the difference
    TreeBuilder b1;
    int r1 = b1.node(0), x1 = b1.node(0), y1 = b1.node(1);
    b1.edge(r1, x1, Rat(1, 2), 1);
    b1.edge(r1, y1, Rat(1, 2), 1);
    TimedTree ta = b1.done();
    TreeBuilder b2;
    int r2 = b2.node(0), x2 = b2.node(0), y2 = b2.node(1);
    b2.edge(r2, x2, Rat(1, 4), 1);
    b2.edge(r2, y2, Rat(3, 4), 1);
    TimedTree tb = b2.done();

    CHECK(delta(ta, tb, Uniform{}).value == Rat(1, 4));
    TimeRescale vanish_at_one{[](const Rat& t) { return Rat(t - 1 < 0 ? Rat(0) : Rat(t - 1)); }};
    CHECK(delta(ta, tb, vanish_at_one).value == 0);

    // durations 2 vs 8 with the same weight function: visible again, and the
    // normalised weights keep the value within [0,1]
    TreeBuilder b3;
    int r3 = b3.node(0), x3 = b3.node(0), y3 = b3.node(1);
    b3.edge(r3, x3, Rat(1, 2), 2);
    b3.edge(r3, y3, Rat(1, 2), 8);
    TimedTree tc = b3.done();
    TreeBuilder b4;
    int r4 = b4.node(0), x4 = b4.node(0), y4 = b4.node(1);
    b4.edge(r4, x4, Rat(1, 2), 8);
    b4.edge(r4, y4, Rat(1, 2), 2);
    TimedTree td = b4.done();
    DeltaResult dr = delta(tc, td, vanish_at_one);
    CHECK(dr.value > 0);
    CHECK(dr.value <= 1);
    CHECK(verify_witness(tc, td, vanish_at_one, dr));
}

TEST_CASE("random tree properties") {
    std::mt19937_64 rng(20260811);
    int zero_cases = 0;
    for (int iter = 0; iter < 200; ++iter) {
        TimedTree a = random_tree(rng), b = random_tree(rng);
        if (iter % 5 == 0) b = a; // force equal pairs regularly

        DeltaResult dab = delta(a, b, Uniform{});
        DeltaResult dba = delta(b, a, Uniform{});
        CHECK(dab.value == dba.value);
        CHECK(dab.value >= 0);
        CHECK(dab.value <= 1);
        CHECK(delta(a, a, Uniform{}).value == 0);

        // agreement with the recursive lumping oracle
        bool bisim = oracle_bisimilar(a, b);
        CHECK((dab.value == 0) == bisim);
        Partition part = refine(a, b);
        CHECK((part.root_block(0) == part.root_block(1)) == bisim);
        if (bisim) ++zero_cases;

        // the class-weighted variant never exceeds the uniform one
        DeltaResult dp = delta_prime(a, b);
        CHECK(dp.value <= dab.value);
        CHECK(dp.value >= 0);
        CHECK((dp.value == 0) == bisim);
        CHECK(delta_prime(b, a).value == dp.value);

        CHECK(verify_witness(a, b, Uniform{}, dab));
        CHECK(verify_witness(a, b, ClassMatch{}, dp));

        // normalisation of the joint distributions of internal nodes
        for (int t = 0; t < 2; ++t) {
            const TimedTree& tree = t == 0 ? a : b;
            for (size_t n = 0; n < tree.nodes.size(); ++n) {
                if (tree.nodes[n].leaf) continue;
                JointDist jd = chi(part, {t, static_cast<int>(n)});
                Rat sum = 0;
                for (const auto& [k, p] : jd) sum += p;
                CHECK(sum == 1);
            }
        }
    }
    CHECK(zero_cases >= 40); // the equal pairs at least
}

TEST_CASE("security of the published programs over the key domain") {
    Program fagat = load_sample("fagat.pw");
    std::vector<Env> keys;
    std::vector<std::string> labels;
    enumerate_bit_keys("k", 3, keys, labels);
    Env low;
    low["i"] = Value(1LL);

    auto fa = pt_secure(fagat, low, keys, cm);
    REQUIRE(fa.ok());
    CHECK(fa.value().secure);
    CHECK(fa.value().max_delta == 0);

    Program agat = load_sample("agat.pw");
    std::vector<Env> two{keys[3], keys[2]}; // 011 and 010
    auto ag = pt_secure(agat, low, two, cm);
    REQUIRE(ag.ok());
    CHECK_FALSE(ag.value().secure);
    CHECK(ag.value().max_delta == 1);

    // a program ignoring its high variables is trivially secure
    auto indiff = parse_program("l low int; h high int; l := 1; l := l + 1");
    REQUIRE(indiff.ok());
    std::vector<Env> highs;
    for (long long v : {0, 1, 2}) {
        Env e;
        e["h"] = Value(v);
        highs.push_back(e);
    }
    auto ind = pt_secure(indiff.value(), Env{}, highs, cm);
    REQUIRE(ind.ok());
    CHECK(ind.value().secure);
}

TEST_CASE("analyses are safe to run concurrently on shared trees") {
    Program pagat = substitute_param(load_sample("pagat.pw"), Rat(1, 2));
    auto lows = low_vars(pagat);
    auto t1 = build_tree(pagat, case_study_env("011"), cm);
    auto t2 = build_tree(pagat, case_study_env("010"), cm);
    REQUIRE(t1.ok());
    REQUIRE(t2.ok());
    const TimedTree a = collapse(t1.value(), lows), b = collapse(t2.value(), lows);

    std::vector<std::future<std::pair<Rat, Rat>>> futs;
    for (int i = 0; i < 8; ++i)
        futs.push_back(std::async(std::launch::async, [&a, &b] {
            return std::make_pair(delta(a, b, Uniform{}).value, delta_prime(a, b).value);
        }));
    for (auto& f : futs) {
        auto [d, dp] = f.get();
        CHECK(d == 1);
        CHECK(dp == Rat(1, 8));
    }
}

TEST_CASE("delta serialises with its witness") {
    TimedTree a = ref_tree_1(), b = ref_tree_2();
    DeltaResult d = delta(a, b, Uniform{});
    json j = delta_to_json(d);
    CHECK(j["value"] == "1/2");
    CHECK(j["value_dec"] == "0.500000");
    REQUIRE(j.contains("witness"));
    CHECK(j["witness"].contains("entry"));
}
