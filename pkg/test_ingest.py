import pytest
from pydantic import ValidationError

from exceptions import CsvParseError, SplitError, SurpriseError
from ingest import (
    CsvSchema,
    SplitSpec,
    chronological_split,
    dataset_stats,
    num_snapshots_at,
    parse_csv,
    read_node_mapping,
    split_by_boundaries,
    surprise_index,
)
from synthetic import hourly_stream, random_stream
from temporal_graph import validate_stream


def write(tmp_path, text, name="events.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_parse_plain_rows(tmp_path):
    stream = parse_csv(write(tmp_path, "0,1,5\n2,3,2\n"))
    assert len(stream) == 2
    assert stream.num_nodes == 4
    assert stream.t_start.tolist() == [2, 5]
    assert stream.transient


def test_parse_error_reports_the_line(tmp_path):
    with pytest.raises(CsvParseError) as info:
        parse_csv(write(tmp_path, "a,b,c\n"))
    assert info.value.line == 1

    with pytest.raises(CsvParseError) as info:
        parse_csv(write(tmp_path, "0,1,5\n1,2,2.5\n"))
    assert info.value.line == 2

    with pytest.raises(CsvParseError) as info:
        parse_csv(write(tmp_path, "0,1,5\n1,2\n"))
    assert info.value.line == 2


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        parse_csv(tmp_path / "nope.csv")


def test_header_and_optional_columns(tmp_path):
    path = write(tmp_path, "src,dst,t,t_end,weight\n0,1,3,7,2.5\n1,0,4,,\n")
    stream = parse_csv(path)
    assert stream.t_end.tolist() == [7, 4]
    assert stream.weight.tolist() == [2.5, 1.0]
    assert not stream.transient

    with pytest.raises(CsvParseError):
        parse_csv(write(tmp_path, "source,dst,t\n0,1,3\n", "bad_header.csv"), CsvSchema(header=True))


def test_node_ids_are_remapped_densely(tmp_path):
    path = write(tmp_path, "10,30,1\n20,10,2\n")
    stream = parse_csv(path)
    assert stream.num_nodes == 3
    assert stream.src.tolist() == [0, 1]
    assert stream.dst.tolist() == [2, 0]
    assert read_node_mapping(tmp_path / "events.csv.nodes.json").tolist() == [10, 20, 30]

    raw = parse_csv(path, CsvSchema(remap_ids=False), persist_mapping=False)
    assert raw.num_nodes == 31
    assert raw.src.tolist() == [10, 20]


def test_large_integers_keep_every_digit(tmp_path):
    path = write(tmp_path, "9007199254740993,9007199254740992,1700000000000000001\n1,2,1700000000000000002\n")
    stream = parse_csv(path)
    assert stream.num_nodes == 4
    assert stream.src[0] != stream.dst[0]
    assert stream.t_start.tolist() == [1700000000000000001, 1700000000000000002]
    assert read_node_mapping(tmp_path / "events.csv.nodes.json").tolist() == [
        1, 2, 9007199254740992, 9007199254740993,
    ]

    with pytest.raises(CsvParseError) as info:
        parse_csv(write(tmp_path, "0,1,5\n1,2,99999999999999999999\n", "overflow.csv"))
    assert info.value.line == 2


def test_other_delimiters(tmp_path):
    stream = parse_csv(write(tmp_path, "0;1;5\n1;2;6\n", "semi.csv"), CsvSchema(delimiter=";"))
    assert len(stream) == 2


def test_chronological_split_sizes():
    def sizes(k):
        stream = validate_stream([(0, 1, t) for t in range(k)])
        return [len(part) for part in chronological_split(stream)]

    assert sizes(10) == [7, 1, 2]
    assert sizes(100) == [70, 15, 15]
    with pytest.raises(SplitError):
        sizes(3)


def test_split_keeps_order_and_universe():
    stream = random_stream(num_nodes=9, num_events=50, t_span=20, seed=0)
    train, val, test = chronological_split(stream, SplitSpec(train_frac=0.5, val_frac=0.25, test_frac=0.25))
    assert train.t_max <= val.t_min and val.t_max <= test.t_min
    assert {part.num_nodes for part in (train, val, test)} == {9}
    with pytest.raises(ValidationError):
        SplitSpec(train_frac=0.5, val_frac=0.5, test_frac=0.5)


def test_split_by_boundaries():
    stream = validate_stream([(0, 1, t) for t in range(10)])
    assert [len(part) for part in split_by_boundaries(stream, 5, 8)] == [5, 3, 2]
    with pytest.raises(SplitError):
        split_by_boundaries(stream, 8, 5)
    with pytest.raises(SplitError):
        split_by_boundaries(stream, 0, 5)


def test_surprise_index():
    train = validate_stream([(1, 2, 0), (2, 3, 1)], num_nodes=5)
    test = validate_stream([(1, 2, 2), (3, 4, 3)], num_nodes=5)
    assert surprise_index(train, test) == 0.5
    assert surprise_index(train, train) == 0.0

    repeated = validate_stream([(1, 2, 2), (3, 4, 3), (3, 4, 4)], num_nodes=5)
    assert surprise_index(train, repeated) == pytest.approx(2 / 3)
    assert surprise_index(train, repeated, unique=True) == 0.5
    with pytest.raises(SurpriseError):
        surprise_index(train, test.slice(0, 0))


def test_surprise_matches_pair_counting():
    for seed in range(20):
        stream = random_stream(num_nodes=6, num_events=60, t_span=100, seed=seed)
        train, _, test = chronological_split(stream)
        seen = set(zip(train.src.tolist(), train.dst.tolist()))
        pairs = list(zip(test.src.tolist(), test.dst.tolist()))
        expected = sum(pair not in seen for pair in pairs) / len(pairs)
        assert surprise_index(train, test) == expected


def test_stats_of_a_repeated_cycle():
    cycle = [(0, 1), (1, 2), (2, 3), (3, 0)]
    stream = validate_stream([(s, d, 4 * k + i) for k in range(3) for i, (s, d) in enumerate(cycle)])
    stats = dataset_stats(stream).to_dict()
    assert (stats["nodes"], stats["edges"], stats["unique_edges"]) == (4, 12, 4)
    assert stats["surprise"] == 0.0
    assert stats["granularity"] == "second"
    assert stats["snapshots"] == 12


def test_stats_of_a_single_event():
    stats = dataset_stats(validate_stream([(0, 1, 7)]))
    assert (stats.num_nodes, stats.num_edges, stats.num_unique_edges, stats.num_snapshots) == (2, 1, 1, 1)
    assert stats.surprise is None
    assert dataset_stats(validate_stream([(3, 3, 7)])).num_nodes == 1


def test_stats_at_a_named_granularity():
    stream = hourly_stream(hours=5, events_per_hour=2, num_nodes=10, seed=1)
    assert num_snapshots_at(stream, "hour") == 5
    stats = dataset_stats(stream, granularity="day")
    assert (stats.granularity, stats.num_snapshots) == ("day", 1)
    assert dataset_stats(stream, granularity=None).num_snapshots is None
