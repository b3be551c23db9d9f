import numpy as np
import pytest

from radiopage import corpus, modem


@pytest.fixture(scope="session")
def raw_corpus():
    return corpus.build_corpus()


@pytest.fixture(scope="session")
def norm_corpus(raw_corpus):
    return corpus.normalize_corpus(raw_corpus)


@pytest.fixture(scope="session")
def mini_pages():
    return corpus.normalize_corpus(corpus.build_corpus(corpus.MINI_PAGE_SPECS))


@pytest.fixture(scope="session")
def profile():
    return modem.OfdmProfile()


def make_page(pixels, page_id=0, url="test.example", quality=10):
    """RasterPage straight from a pixel grid, bypassing normalization."""
    from radiopage.raster import RasterPage

    return RasterPage(page_id=page_id, url=url,
                      pixels=np.asarray(pixels, dtype=np.uint16),
                      quality_q=quality, crop_limit_ph=None,
                      compressed_size_bytes=1)
