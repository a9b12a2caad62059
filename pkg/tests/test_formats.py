from lexmt import formats as FM
from lexmt import fs as F


DOG_LEXICON = """
; full-form storage: no morphology, one entry per inflected form
(entry :form "dog"  :lemma "dog" :flags () :sign (cat n) (agr (per 3) (num sg)) (sem (index ?x)))
(entry :form "dogs" :lemma "dog" :flags () :sign (cat n) (agr (per 3) (num pl)) (sem (index ?x)))
"""


def test_load_lexicon_full_forms():
    lex, diags = FM.load_lexicon(DOG_LEXICON)
    assert diags == []
    assert len(lex.entries) == 2
    assert [e.form for e in lex.entries] == ["dog", "dogs"]
    assert {e.lemma for e in lex.entries} == {"dog"}
    sg = F.resolve(lex.entries[0].sign, ("agr", "num"))
    pl = F.resolve(lex.entries[1].sign, ("agr", "num"))
    assert (sg.value, pl.value) == ("sg", "pl")
    # lemma is folded into the sign for later pattern matching
    assert F.resolve(lex.entries[0].sign, ("lemma",)).value == "dog"


def test_load_lexicon_empty_file():
    lex, diags = FM.load_lexicon("")
    assert lex.entries == [] and diags == []


def test_load_lexicon_missing_cat():
    text = '(entry :form "x" :lemma "x" :flags () :sign (num sg))'
    lex, diags = FM.load_lexicon(text)
    assert lex.entries == []
    assert len(diags) == 1 and "cat" in diags[0].message and diags[0].line == 1


def test_load_lexicon_duplicate_feature():
    text = '(entry :form "x" :lemma "x" :flags () :sign (cat n) (cat v))'
    lex, diags = FM.load_lexicon(text)
    assert lex.entries == []
    assert any("duplicate feature" in d.message for d in diags)


def test_load_lexicon_reports_all_errors_in_one_pass():
    text = "\n".join([
        '(entry :form "a" :lemma "a" :flags () :sign (num sg))',
        '(entry :form "b" :lemma "b" :flags () :sign (cat n))',
        '(entry :form "c" :lemma "c" :flags () :sign (num pl))',
    ])
    lex, diags = FM.load_lexicon(text)
    assert [e.form for e in lex.entries] == ["b"]
    assert [d.line for d in diags] == [1, 3]


def test_lexicon_homonyms_kept_in_file_order():
    text = "\n".join([
        '(entry :form "saw" :lemma "saw" :flags () :sign (cat n))',
        '(entry :form "saw" :lemma "see" :flags () :sign (cat v))',
    ])
    lex, diags = FM.load_lexicon(text)
    assert diags == []
    assert [e.lemma for e in lex.by_form["saw"]] == ["saw", "see"]


GRAMMAR = """
(direction source)
(roots s np)
(rule s_np_v
  :mother (cat s) (sem ?s=(arg1 ?subj))
  :daughters ((cat np) (sem (index ?subj)))
             ((cat v) (sem ?s)))
(rule np_n
  :mother (cat np) (agr ?a) (sem ?s)
  :daughters ((cat n) (agr ?a) (sem ?s)))
"""


def test_load_grammar_shared_variables():
    g, diags = FM.load_grammar(GRAMMAR)
    assert diags == []
    assert g.direction == "source"
    assert g.root_categories == {"s", "np"}
    rule = g.rules[0]
    # the subject index in daughter 0 is the same node as arg1 in daughter 1
    d0_index = F.resolve(rule.daughters[0], ("sem", "index"))
    d1_arg1 = F.resolve(rule.daughters[1], ("sem", "arg1"))
    assert d0_index is d1_arg1
    # and the mother's sem is shared with daughter 1's sem
    assert F.resolve(rule.mother, ("sem",)) is F.resolve(rule.daughters[1], ("sem",))


def test_load_grammar_goal_recorded():
    text = GRAMMAR + """
(rule np_det_n
  :mother (cat np) (sem ?s)
  :daughters ((cat det)) ((cat n) (sem ?s))
  :goals (agree 0.agr 1.agr) (require 1.lemma "tal"))
"""
    g, diags = FM.load_grammar(text)
    assert diags == []
    rule = g.rules[-1]
    assert [goal.name for goal in rule.goals] == ["agree", "require"]
    assert rule.goals[0].args[0] == ("path", 0, ("agr",))
    assert rule.goals[1].args[1] == ("const", "tal")


def test_load_grammar_unknown_goal():
    text = "(roots s)\n(rule r :mother (cat s) :daughters ((cat n)) :goals (frobnicate 0.agr 1.agr))"
    _, diags = FM.load_grammar(text)
    assert any("unknown goal" in d.message for d in diags)


def test_load_grammar_goal_daughter_out_of_range():
    text = "(roots s)\n(rule r :mother (cat s) :daughters ((cat n)) :goals (agree 0.agr 2.agr))"
    _, diags = FM.load_grammar(text)
    assert any("out of range" in d.message for d in diags)


def test_load_grammar_too_many_daughters():
    ds = " ".join("((cat n))" for _ in range(5))
    text = f"(roots s)\n(rule r :mother (cat s) :daughters {ds})"
    _, diags = FM.load_grammar(text)
    assert any("1..4 daughters" in d.message for d in diags)


def test_load_grammar_rejects_unary_cycle():
    text = """
(roots s)
(rule a2b :mother (cat b) :daughters ((cat a)))
(rule b2a :mother (cat a) :daughters ((cat b)))
"""
    _, diags = FM.load_grammar(text)
    assert any("cycle" in d.message for d in diags)


BILINGUAL = """
(tmacro demo
  :trigger (cat v) (subcat ditrans) (sem (arg3 ?y))
  :source-extra ((cat det) (lemma "the") (sem (arg1 ?y)))
  :target-extra ((cat cl) (lemma "le") (sem (index ?y))))

(bi kick-the-bucket :key "kick"
  :source ((cat v) (lemma "kick") (sem (index ?e) (arg2 ?b)))
          ((cat det) (lemma "the") (sem (arg1 ?b)))
          ((cat n) (lemma "bucket") (sem (index ?b)))
  :target ((cat v) (lemma "estirar") (sem (index ?e) (arg2 ?b)))
          ((cat det) (lemma "el") (sem (arg1 ?b)))
          ((cat n) (lemma "pata") (sem (index ?b))))

(bi trip1 :key "trip"
  :source ((cat v) (lemma "trip") (sem (index ?e)))
  :target ((cat v) (lemma "hacer") (sem (index ?e)))
          ((cat v) (lemma "tropezar") (sem (index ?e))))

(bi i-zero :key "i" :source ((cat pron) (lemma "i")))

(bi tell1 :key "tell" :macros (demo)
  :source ((cat v) (lemma "tell") (subcat ditrans) (sem (index ?e) (arg3 ?y)))
  :target ((cat v) (lemma "decir") (sem (index ?e) (arg3 ?y))))
"""


def test_load_bilingual_many_to_many_and_one_to_many():
    bl, diags = FM.load_bilingual(BILINGUAL)
    assert diags == []
    kick = bl.by_key["kick"][0]
    assert len(kick.source) == 3 and len(kick.target) == 3
    # source and target share the index variable of the consumed noun
    assert F.resolve(kick.source[2], ("sem", "index")) is F.resolve(kick.target[2], ("sem", "index"))
    trip = bl.by_key["trip"][0]
    assert len(trip.source) == 1 and len(trip.target) == 2
    # the two target signs share the event index
    assert F.resolve(trip.target[0], ("sem", "index")) is F.resolve(trip.target[1], ("sem", "index"))


def test_load_bilingual_zero_target():
    bl, _ = FM.load_bilingual(BILINGUAL)
    assert bl.by_key["i"][0].target == []


def test_load_bilingual_macro_resolution():
    bl, diags = FM.load_bilingual(BILINGUAL)
    assert diags == []
    tell = bl.by_key["tell"][0]
    assert tell.macro_names == ["demo"]
    assert tell.macros[0] is bl.macros["demo"]


def test_load_bilingual_key_must_match_exactly_one():
    text = '(bi bad :key "kick" :source ((cat v) (lemma "boot")) :target ((cat v) (lemma "x")))'
    _, diags = FM.load_bilingual(text)
    assert any("exactly one source sign" in d.message for d in diags)


def test_load_bilingual_unknown_macro():
    text = '(bi bad :key "x" :source ((cat v) (lemma "x")) :macros (nope))'
    _, diags = FM.load_bilingual(text)
    assert any("unknown macro" in d.message for d in diags)


def test_policy_parse():
    policy, diags = FM.load_policy("; comment\ninverted-question: yes\n")
    assert diags == [] and policy.inverted_question is True
    policy, diags = FM.load_policy("inverted-question: maybe\n")
    assert len(diags) == 1


# ---------------------------------------------------------------------------
# Round trips: load(serialize(load(f))) equals load(f).

def _lexicons_equal(a: FM.Lexicon, b: FM.Lexicon) -> bool:
    if len(a.entries) != len(b.entries):
        return False
    for x, y in zip(a.entries, b.entries):
        if (x.form, x.lemma, x.flags) != (y.form, y.lemma, y.flags):
            return False
        if F.canonical(x.sign) != F.canonical(y.sign):
            return False
    return True


def test_round_trip_lexicon():
    lex1, _ = FM.load_lexicon(DOG_LEXICON)
    lex2, diags = FM.load_lexicon(FM.serialize(lex1))
    assert diags == []
    assert _lexicons_equal(lex1, lex2)
    lex3, _ = FM.load_lexicon(FM.serialize(lex2))
    assert _lexicons_equal(lex2, lex3)


def test_round_trip_grammar_preserves_sharing():
    g1, _ = FM.load_grammar(GRAMMAR)
    g2, diags = FM.load_grammar(FM.serialize(g1))
    assert diags == []
    assert g1.roots == g2.roots and g1.direction == g2.direction
    for r1, r2 in zip(g1.rules, g2.rules):
        assert r1.name == r2.name
        assert F.canonical_multi([r1.mother] + r1.daughters) == F.canonical_multi([r2.mother] + r2.daughters)
    rule = g2.rules[0]
    assert F.resolve(rule.daughters[0], ("sem", "index")) is F.resolve(rule.daughters[1], ("sem", "arg1"))


def test_round_trip_bilingual_and_macros():
    bl1, _ = FM.load_bilingual(BILINGUAL)
    text = FM.serialize(bl1)
    bl2, diags = FM.load_bilingual(text)
    assert diags == []
    assert [e.name for e in bl1.entries] == [e.name for e in bl2.entries]
    for e1, e2 in zip(bl1.entries, bl2.entries):
        assert (e1.key, e1.key_index, e1.macro_names) == (e2.key, e2.key_index, e2.macro_names)
        assert F.canonical_multi(e1.source + e1.target) == F.canonical_multi(e2.source + e2.target)
    m1, m2 = bl1.macros["demo"], bl2.macros["demo"]
    assert F.canonical_multi([m1.trigger] + m1.source_extra + m1.target_extra) == \
        F.canonical_multi([m2.trigger] + m2.source_extra + m2.target_extra)


def test_round_trip_manifest():
    text = '(manifest :files (source.lex) :covers "hi." "yes, madam." :passthrough-ok (mj petechia))'
    m1, diags = FM.load_manifest(text)
    assert diags == []
    m2, diags = FM.load_manifest(FM.serialize(m1))
    assert diags == []
    assert (m1.files, m1.covers, m1.passthrough_ok) == (m2.files, m2.covers, m2.passthrough_ok)
