import pytest

from paracrystal import materials


@pytest.fixture(autouse=True)
def shipped_database():
    materials.use_database(None)
    yield
    materials.use_database(None)


@pytest.fixture
def custom_db(tmp_path):
    """Write a one-off material database and return its path."""
    def make(text):
        path = tmp_path / "db.ini"
        path.write_text(text)
        return path
    return make
