from __future__ import annotations

import pytest

from aurora.errors import ConfigError, ValidationError
from aurora.model import (Gazetteer, LocationRegistry, PopulationTable,
                          chilean_regions, load_gazetteer, load_population,
                          load_registry, normalize_place, post_to_record,
                          validate_post)


def make_record(**overrides):
    record = {
        "id": "t1",
        "text": "hola",
        "created_at": "2014-10-01T12:00:00Z",
        "author": {
            "id": "u1",
            "screen_name": "alice",
            "location": "Santiago",
            "followers": 10,
            "friends": 5,
            "statuses": 100,
            "created_at": 1_300_000_000,
        },
        "retweet_count": 2,
        "entities": {"hashtags": ["municipales"], "urls": [], "mentions": ["u2"]},
    }
    record.update(overrides)
    return record


class TestValidatePost:
    def test_valid_record_maps_fields(self):
        post = validate_post(make_record())
        assert post.id == "t1"
        assert post.text == "hola"
        assert post.author.screen_name == "alice"
        assert post.retweet_count == 2
        assert post.hashtags == frozenset({"municipales"})
        assert post.created_at == 1412164800.0

    def test_text_at_140_chars_is_accepted(self):
        post = validate_post(make_record(text="x" * 140))
        assert len(post.text) == 140

    def test_text_over_140_chars_rejected(self):
        with pytest.raises(ValidationError) as err:
            validate_post(make_record(text="x" * 141))
        assert err.value.code == "TEXT_TOO_LONG"

    def test_char_count_uses_unicode_scalars(self):
        # 140 non-ASCII characters are fine even though UTF-8 needs more bytes.
        post = validate_post(make_record(text="ñ" * 140))
        assert len(post.text) == 140

    def test_missing_created_at_rejected(self):
        record = make_record()
        del record["created_at"]
        with pytest.raises(ValidationError) as err:
            validate_post(record)
        assert err.value.code == "MISSING_FIELD"
        assert "created_at" in str(err.value)

    def test_missing_id_and_author_rejected(self):
        record = make_record()
        del record["id"]
        with pytest.raises(ValidationError) as err:
            validate_post(record)
        assert err.value.code == "MISSING_FIELD"
        record = make_record()
        del record["author"]
        with pytest.raises(ValidationError):
            validate_post(record)

    def test_malformed_timestamp_rejected(self):
        with pytest.raises(ValidationError) as err:
            validate_post(make_record(created_at="yesterday"))
        assert err.value.code == "BAD_TIMESTAMP"

    def test_retweeted_status_maps_to_retweet_of(self):
        record = make_record(retweeted_status={"id": "t0", "author_id": "u9"})
        post = validate_post(record)
        assert post.is_retweet
        assert post.retweet_of == ("t0", "u9")

    def test_every_input_yields_post_or_reason(self):
        # Totality: junk inputs still raise a coded ValidationError, nothing else.
        for junk in ({}, {"id": "x"}, {"id": "x", "text": "hi"}, []):
            try:
                validate_post(junk)
            except ValidationError as exc:
                assert exc.code
            else:
                pytest.fail("junk record validated")

    def test_round_trip(self):
        record = make_record(reply_to_author_id="u7", location="RM",
                             retweeted_status={"id": "t0", "author_id": "u9"})
        post = validate_post(record)
        again = validate_post(post_to_record(post))
        assert again == post


class TestRegistry:
    def test_chilean_registry_has_15_regions(self):
        registry = chilean_regions()
        assert len(registry) == 15
        assert "RM" in registry
        assert registry.name_of("V") == "Valparaíso"

    def test_registry_requires_two_locations(self):
        with pytest.raises(ConfigError):
            LocationRegistry([("RM", "Metro")])

    def test_duplicate_codes_rejected(self):
        with pytest.raises(ConfigError):
            LocationRegistry([("A", "x"), ("A", "y")])

    def test_index_is_stable(self):
        registry = chilean_regions()
        assert registry.index_of(registry.codes[0]) == 0
        assert registry.index_of("RM") == registry.codes.index("RM")


class TestNormalizePlace:
    def test_strips_accents_case_and_whitespace(self):
        assert normalize_place("  Valparaíso  ") == "valparaiso"
        assert normalize_place("REGIÓN   Metropolitana") == "region metropolitana"

    def test_idempotent(self):
        for raw in ("Ñuñoa", " SANTIAGO de  Chile ", "temuco"):
            once = normalize_place(raw)
            assert normalize_place(once) == once


class TestPopulationTable:
    def test_shares_must_sum_to_one(self, registry):
        shares = dict.fromkeys(registry.codes, 1.0 / 15)
        shares["RM"] += 1.0 - sum(shares.values())
        PopulationTable(shares, registry)
        shares["RM"] += 0.5
        with pytest.raises(ConfigError):
            PopulationTable(shares, registry)

    def test_missing_location_rejected(self, registry):
        shares = {code: 1.0 / 14 for code in registry.codes if code != "RM"}
        with pytest.raises(ConfigError) as err:
            PopulationTable(shares, registry)
        assert err.value.code == "MISSING_POPULATION"


class TestCsvLoaders:
    def test_load_registry_population_gazetteer(self, tmp_path):
        reg = tmp_path / "registry.csv"
        reg.write_text("code,name\nRM,Metropolitana\nV,Valparaíso\n", encoding="utf-8")
        registry = load_registry(reg)
        assert registry.codes == ("RM", "V")

        pop = tmp_path / "population.csv"
        pop.write_text("code,share\nRM,0.6\nV,0.4\n", encoding="utf-8")
        table = load_population(pop, registry)
        assert table.share("RM") == pytest.approx(0.6)

        gaz = tmp_path / "gazetteer.csv"
        gaz.write_text("alias,code\nSantiago,RM\nValparaíso,V\n", encoding="utf-8")
        gazetteer = load_gazetteer(gaz, registry)
        assert gazetteer.lookup("santiago") == "RM"
        assert gazetteer.lookup("VALPARAISO") == "V"
