import numpy as np
import pytest

from tramicp.data import Dataset, InputError, Response, read_csv_dataset


def test_response_kinds():
    r = Response(np.array([1.0, -np.inf, 2.0, 0.0]), np.array([1.0, 3.0, np.inf, 0.5]))
    np.testing.assert_array_equal(r.is_exact, [True, False, False, False])
    np.testing.assert_array_equal(r.is_left, [False, True, False, False])
    np.testing.assert_array_equal(r.is_right, [False, False, True, False])
    np.testing.assert_array_equal(r.is_interval, [False, False, False, True])
    np.testing.assert_allclose(r.representative(), [1.0, 3.0, 2.0, 0.25])
    with pytest.raises(ValueError):
        r.y


def test_response_validation():
    with pytest.raises(ValueError):
        Response.interval_censored([1.0], [1.0])
    with pytest.raises(ValueError):
        Response([2.0], [1.0])
    with pytest.raises(ValueError):
        Response.exact([np.nan])
    with pytest.raises(ValueError):
        Response.exact([np.inf])


def test_dataset_defaults():
    ds = Dataset(np.arange(4.0), np.ones((4, 2)), np.zeros(4))
    assert ds.covariate_names == ("X1", "X2") and ds.env_names == ("E1",)
    assert (ds.n, ds.d, ds.q) == (4, 2, 1)
    with pytest.raises(ValueError):
        Dataset(np.arange(4.0), np.ones((3, 2)), np.zeros(4))


def test_csv_exact_and_categorical(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("y,x1,x2,env\n1.5,0,1,a\n2.5,1,0,b\n0.5,2,2,c\n")
    ds = read_csv_dataset(path, "y", ["x1", "x2"], ["env"])
    np.testing.assert_allclose(ds.response.y, [1.5, 2.5, 0.5])
    np.testing.assert_allclose(ds.E, [[0, 0], [1, 0], [0, 1]])
    assert ds.env_names == ("envb", "envc")


def test_csv_binary_categorical_env_is_single_column(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("y,x,env\n1,0,ctrl\n0,1,treat\n1,2,ctrl\n")
    ds = read_csv_dataset(path, "y", ["x"], ["env"])
    np.testing.assert_allclose(ds.E[:, 0], [0, 1, 0])


def test_csv_censored_columns(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("l,u,x,e\n1,1,0,0\n,2,0,1\n3,,1,0\n1,4,1,1\n")
    ds = read_csv_dataset(path, ["l", "u"], ["x"], ["e"])
    r = ds.response
    np.testing.assert_array_equal(r.is_exact, [True, False, False, False])
    assert r.is_left[1] and r.is_right[2] and r.is_interval[3]


@pytest.mark.parametrize(
    "text, cols",
    [
        ("y,x,e\n1,a,0\n", ("y", ["x"], ["e"])),
        ("y,x,e\n1,0,0\n", ("y", ["z"], ["e"])),
        ("y,x,e\n", ("y", ["x"], ["e"])),
        ("l,u,x,e\n,,0,0\n", (["l", "u"], ["x"], ["e"])),
        ("l,u,x,e\n2,1,0,0\n", (["l", "u"], ["x"], ["e"])),
        ("y,x,e\n1,0,a\n2,0,a\n", ("y", ["x"], ["e"])),
    ],
)
def test_csv_input_errors(tmp_path, text, cols):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(InputError):
        read_csv_dataset(path, *cols)
