import pytest

from bimqa.model import Block
from bimqa.textualize import (
    GrammarError, TemplateError, TextTemplateSet, default_templates, numeric_ordinal, parse_block_text, textualize,
)

from conftest import beam, ref_wall, rect_slab

REF_SENTENCE = (
    "The ID of the 1st wall is 342693. Its starting point coordinate is (-1897, -5891, 0), and the ending point "
    "coordinate is (-1897, -3191, 0). The wall thickness is 200 mm, the wall height is 2900 mm, the wall length "
    "is 2700 mm, and its construction number is Q23."
)


def _parse(text, b):
    return parse_block_text(text, b.block_id, b.source_model, b.block_size_mm)


def test_ref_sentence_byte_for_byte(ref_block):
    lines = textualize(ref_block).split("\n")
    assert REF_SENTENCE in lines


def test_header_lists_present_kinds(room_block):
    first = textualize(room_block).split("\n")[0]
    assert first == ("This is part of a single-story building model, including three types of components: "
                     "shear walls, structural beams, and slabs.")


def test_erased_number_drops_its_clause():
    b = Block("b", "m", 8000, [ref_wall(construction_number=None)])
    text = textualize(b)
    assert "the wall length is 2700 mm." in text
    assert "construction number is" not in text


def test_fire_clause():
    b = Block("b", "m", 8000, [beam(5, 0, 0, 4000, 0, hours=1)])
    assert "Its fire resistance is 1 hour." in textualize(b)


def test_numeric_ordinals():
    assert [numeric_ordinal(n) for n in (1, 2, 3, 4, 11, 12, 13, 21, 22, 101)] == [
        "1st", "2nd", "3rd", "4th", "11th", "12th", "13th", "21st", "22nd", "101st"]


def test_round_trip_on_fixture_blocks(ref_block, room_block):
    for b in (ref_block, room_block):
        text = textualize(b)
        parsed = _parse(text, b)
        assert parsed.components == b.components
        assert textualize(parsed) == text


def test_round_trip_on_every_corpus_block(corpus):
    for ab in corpus:
        for text in (ab.block.clean_text, ab.block.defect_text):
            assert textualize(_parse(text, ab.block)) == text


def test_grammar_error_reports_position(room_block):
    text = textualize(room_block).replace("The section width is", "The section widht is", 1)
    with pytest.raises(GrammarError) as info:
        _parse(text, room_block)
    assert info.value.line > 1
    assert info.value.column > 1


def test_out_of_sequence_ordinal(ref_block):
    with pytest.raises(GrammarError):
        _parse(textualize(ref_block).replace("1st wall", "2nd wall"), ref_block)


def test_custom_template_set():
    t = default_templates()
    d = {
        "locale": t.locale, "header_template": t.header_template, "kind_names": dict(t.kind_names),
        "kind_header_templates": dict(t.kind_header_templates),
        "data_templates": {k: dict(v) for k, v in t.data_templates.items()},
    }
    d["header_template"] = "Model part with {count} {type_noun}: {kinds}."
    custom = TextTemplateSet.from_dict(d)
    b = Block("b", "m", 8000, [rect_slab(1, 0, 0, 1000, 1000)])
    assert textualize(b, custom).startswith("Model part with one type: slabs.")


def test_unbound_placeholder_rejected():
    t = default_templates()
    d = {
        "locale": t.locale, "header_template": "{count} {colour} components", "kind_names": dict(t.kind_names),
        "kind_header_templates": dict(t.kind_header_templates),
        "data_templates": {k: dict(v) for k, v in t.data_templates.items()},
    }
    custom = TextTemplateSet.from_dict(d)
    with pytest.raises(TemplateError):
        textualize(Block("b", "m", 8000, [rect_slab(1, 0, 0, 1000, 1000)]), custom)


def test_custom_templates_cannot_be_parsed(ref_block):
    t = default_templates()
    custom = TextTemplateSet(t.header_template, t.kind_names, t.kind_header_templates, t.data_templates, "fr")
    with pytest.raises(TemplateError):
        parse_block_text(textualize(ref_block), "ref", "m", 8000, custom)
