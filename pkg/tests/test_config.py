import pytest

from mims.config import ConfigError, CoreConfig, SimConfig
from mims.dram import TimingParams


def test_defaults_are_valid():
    cfg = SimConfig().validate()
    assert (cfg.cores, cfg.channels, cfg.ranks, cfg.subranks) == (16, 2, 2, 8)
    assert (cfg.read_queue, cfg.write_queue, cfg.high_mark, cfg.low_mark) == (64, 64, 48, 16)
    assert cfg.sched_latency == 40 and cfg.max_payload == 504


def test_ini_round_trip(tmp_path):
    cfg = SimConfig(mode="MI_1", sched_latency=80, merge=True, seed=9,
                    timing=TimingParams(tRFC=120), core=CoreConfig(rob_size=128))
    p = tmp_path / "sim.ini"
    cfg.save(p)
    back = SimConfig.load(p)
    assert back == cfg
    assert back.to_ini() == cfg.to_ini()


def test_partial_ini_keeps_defaults():
    cfg = SimConfig.from_ini("[sim]\nmode = DDR\n[timing]\ntRCD = 10\n")
    assert cfg.mode == "DDR" and cfg.timing.tRCD == 10 and cfg.cores == 16


@pytest.mark.parametrize("text", [
    "[bogus]\nx = 1\n",
    "[sim]\nnot_a_key = 1\n",
    "[sim]\nrefresh = maybe\n",
    "[sim]\nmode = HBM\n",
])
def test_bad_ini(text):
    with pytest.raises(ConfigError):
        SimConfig.from_ini(text)


@pytest.mark.parametrize("kw", [
    dict(mode="DDR", compression="single"),
    dict(mode="MI_1", compression="multi_offline"),
    dict(mode="BOB", merge=True),
    dict(mode="MI_MUL", subranks=1),
    dict(channels=4),
    dict(banks=3),
    dict(high_mark=10, low_mark=16),
    dict(sched_latency=-1),
    dict(diff_bits=12),
    dict(n_base=0),
    dict(reqid_bits=0),
    dict(records=0),
    dict(core=CoreConfig(rob_size=0)),
])
def test_illegal_configs(kw):
    with pytest.raises(ConfigError):
        SimConfig(**kw).validate()


def test_overrides():
    cfg = SimConfig().with_overrides(["mode=DDR", "timing.tRFC=110", "core.rob_size=0x80",
                                      "refresh=off"])
    assert cfg.mode == "DDR" and cfg.timing.tRFC == 110 and cfg.core.rob_size == 128
    assert cfg.refresh is False
    for bad in (["mode"], ["nosuch.x=1"], ["timing.nope=1"]):
        with pytest.raises(ConfigError):
            SimConfig().with_overrides(bad)


def test_overrides_are_validated():
    with pytest.raises(ConfigError):
        SimConfig(mode="DDR").with_overrides(["compression=single"])
