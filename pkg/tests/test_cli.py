"""End-to-end command-line flows, exit codes, and determinism."""

import json

import pytest

from codehom.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def base_key(tmp_path_factory):
    d = tmp_path_factory.mktemp("base")
    prefix = d / "key"
    assert main(["keygen", "--n", "24", "--r", "9", "--s", "3",
                 "--out", str(prefix), "--seed", "7"]) == 0
    return prefix


@pytest.fixture(scope="module")
def mini_keys(tmp_path_factory):
    d = tmp_path_factory.mktemp("hom") / "hk"
    assert main(["hom-keygen", "--n", "16", "--r", "6", "--s", "3", "--field-k", "4",
                 "--k", "32", "--d", "1", "--b", "8", "--lambda-target", "0.9",
                 "--mid-n", "8", "--out", str(d), "--seed", "11"]) == 0
    return d


def test_encrypt_decrypt_round_trip(base_key, tmp_path, capsys):
    ct = tmp_path / "ct.json"
    code, _, _ = run(capsys, "encrypt", "--pk", f"{base_key}.pk.json",
                     "--m", "1a", "--out", ct, "--seed", "3")
    assert code == 0
    code, out, _ = run(capsys, "decrypt", "--sk", f"{base_key}.sk.json", "--ct", ct)
    assert code == 0
    assert out.strip() == "1a"


def test_keygen_validation_exit_codes(tmp_path, capsys):
    code, _, err = run(capsys, "keygen", "--n", "24", "--r", "9", "--s", "4",
                       "--out", tmp_path / "x")
    assert code == 2
    assert "multiple of 3" in err
    code, _, _ = run(capsys, "keygen", "--n", "24", "--out", tmp_path / "x")
    assert code == 1
    code, _, _ = run(capsys, "keygen", "--n", "24", "--alpha", "0.25",
                     "--r", "9", "--out", tmp_path / "x")
    assert code == 1


def test_keygen_alpha_family(tmp_path, capsys):
    code, out, _ = run(capsys, "keygen", "--n", "64", "--alpha", "0.25",
                       "--out", tmp_path / "fam", "--seed", "1")
    assert code == 0
    assert "fam.pk.json" in out


def test_encrypt_rejects_bad_message(base_key, tmp_path, capsys):
    code, _, err = run(capsys, "encrypt", "--pk", f"{base_key}.pk.json",
                       "--m", "zz", "--out", tmp_path / "ct.json")
    assert code == 1 and "hex" in err
    code, _, err = run(capsys, "encrypt", "--pk", f"{base_key}.pk.json",
                       "--m", "1ff", "--out", tmp_path / "ct.json")
    assert code == 1 and "outside field" in err


def test_wrong_file_kind_is_data_error(base_key, capsys):
    code, _, err = run(capsys, "decrypt", "--sk", f"{base_key}.sk.json",
                       "--ct", f"{base_key}.pk.json")
    assert code == 3
    assert "kind" in err


def test_missing_file_is_data_error(base_key, tmp_path, capsys):
    code, _, err = run(capsys, "decrypt", "--sk", f"{base_key}.sk.json",
                       "--ct", tmp_path / "absent.json")
    assert code == 3
    assert "no such file" in err


def test_unknown_command_is_usage(capsys):
    assert main(["nonsense"]) == 1
    capsys.readouterr()


def test_help_exits_clean(capsys):
    assert main(["--help"]) == 0
    assert main(["hom-eval", "--help"]) == 0
    capsys.readouterr()


def test_hom_and_matches_plaintext(mini_keys, tmp_path, capsys):
    net = tmp_path / "and.net"
    net.write_text("inputs x0 x1\nt = AND x0 x1\noutputs t\n")
    for a in (0, 1):
        for b in (0, 1):
            xa, xb = tmp_path / "a.kct.json", tmp_path / "b.kct.json"
            assert run(capsys, "hom-encrypt", "--keys", mini_keys, "--m", str(a),
                       "--out", xa, "--seed", 5 + a)[0] == 0
            assert run(capsys, "hom-encrypt", "--keys", mini_keys, "--m", str(b),
                       "--out", xb, "--seed", 8 + b)[0] == 0
            code, _, _ = run(capsys, "hom-eval", "--keys", mini_keys, "--circuit", net,
                             "--inputs", xa, xb, "--out", tmp_path / "r")
            assert code == 0
            code, out, _ = run(capsys, "hom-decrypt", "--keys", mini_keys,
                               "--ct", tmp_path / "r.kct.json")
            assert code == 0
            assert int(out.strip(), 16) == (a & b)


def test_hom_decrypt_fresh_level(mini_keys, tmp_path, capsys):
    ct = tmp_path / "m.kct.json"
    assert run(capsys, "hom-encrypt", "--keys", mini_keys, "--m", "1",
               "--out", ct, "--seed", 2)[0] == 0
    code, out, _ = run(capsys, "hom-decrypt", "--keys", mini_keys, "--ct", ct, "--fresh")
    assert code == 0 and out.strip() == "1"


def test_hom_eval_arity_mismatch(mini_keys, tmp_path, capsys):
    net = tmp_path / "and.net"
    net.write_text("inputs x0 x1\nt = AND x0 x1\noutputs t\n")
    ct = tmp_path / "m.kct.json"
    assert run(capsys, "hom-encrypt", "--keys", mini_keys, "--m", "1",
               "--out", ct, "--seed", 2)[0] == 0
    code, _, err = run(capsys, "hom-eval", "--keys", mini_keys, "--circuit", net,
                       "--inputs", ct, "--out", tmp_path / "r")
    assert code == 1
    assert "2" in err


def test_hom_eval_multi_output_files(mini_keys, tmp_path, capsys):
    net = tmp_path / "two.net"
    net.write_text("inputs x0 x1\nt = AND x0 x1\nu = XOR x0 x1\noutputs t u\n")
    xa, xb = tmp_path / "a.kct.json", tmp_path / "b.kct.json"
    run(capsys, "hom-encrypt", "--keys", mini_keys, "--m", "1", "--out", xa, "--seed", 3)
    run(capsys, "hom-encrypt", "--keys", mini_keys, "--m", "0", "--out", xb, "--seed", 4)
    code, _, _ = run(capsys, "hom-eval", "--keys", mini_keys, "--circuit", net,
                     "--inputs", xa, xb, "--out", tmp_path / "r", "--cheap-xor")
    assert code == 0
    assert (tmp_path / "r0.kct.json").exists() and (tmp_path / "r1.kct.json").exists()
    _, out_t, _ = run(capsys, "hom-decrypt", "--keys", mini_keys,
                      "--ct", tmp_path / "r0.kct.json")
    _, out_u, _ = run(capsys, "hom-decrypt", "--keys", mini_keys,
                      "--ct", tmp_path / "r1.kct.json")
    assert out_t.strip() == "0" and out_u.strip() == "1"


def test_bad_netlist_is_data_error(mini_keys, tmp_path, capsys):
    net = tmp_path / "bad.net"
    net.write_text("inputs x0\nt = AND x0 x0 x0\noutputs t\n")
    ct = tmp_path / "m.kct.json"
    run(capsys, "hom-encrypt", "--keys", mini_keys, "--m", "1", "--out", ct, "--seed", 2)
    code, _, _ = run(capsys, "hom-eval", "--keys", mini_keys, "--circuit", net,
                     "--inputs", ct, "--out", tmp_path / "r")
    assert code == 3


def test_analyze_rank_deterministic_branch(capsys):
    code, out, _ = run(capsys, "analyze", "rank", "--t", "9", "--s-overlap", "2",
                       "--trials", "200", "--seed", "4", "--format", "json")
    assert code == 0
    assert json.loads(out)["estimate"] == 0.0


def test_analyze_seed_reproducibility(capsys):
    argv = ["analyze", "rank", "--t", "9", "--trials", "1500",
            "--seed", "9", "--jobs", "3", "--format", "json"]
    code, out1, _ = run(capsys, *argv)
    assert code == 0
    _, out2, _ = run(capsys, *argv)
    a, b = json.loads(out1), json.loads(out2)
    a.pop("seconds"), b.pop("seconds")
    assert a == b
    assert a["trials"] == 1500


def test_analyze_noise_formats(capsys):
    code, out, _ = run(capsys, "analyze", "noise", "--eta", "0.1", "--trials", "400",
                       "--seed", "2", "--format", "csv")
    assert code == 0
    assert out.splitlines()[0].startswith("name,trials")
    code, out, _ = run(capsys, "analyze", "noise", "--eta", "0", "--trials", "100",
                       "--seed", "2")
    assert code == 0
    assert "1.000000" in out


def test_analyze_budget_exit_codes(capsys):
    code, out, _ = run(capsys, "analyze", "budget", "--scale", "0.15", "--seed", "7")
    assert code == 0
    assert "verdict" in out
    code, _, err = run(capsys, "analyze", "budget", "--scale", "0.1",
                       "--negative-control", "--seed", "8")
    assert code == 4
    assert "violated" in err


def test_selftest_passes(capsys):
    code, out, _ = run(capsys, "selftest", "--seed", "3")
    assert code == 0
    assert "selftest passed" in out
