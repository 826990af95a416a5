#!/usr/bin/env python3
"""Materialize the MovieLens ml-100k files (u.data, u.item, u.user, u.genre,
u.occupation, u.info) under DEST (default: data/ml-100k).

Tries the GroupLens archive first; if that is unreachable, rebuilds the files
from the parquet copies shipped inside the pytorch-widedeep wheel.
"""
import io
import os
import subprocess
import sys
import tempfile
import urllib.request
import zipfile

URL = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"
GENRES = ["unknown", "Action", "Adventure", "Animation", "Children's", "Comedy",
          "Crime", "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror",
          "Musical", "Mystery", "Romance", "Sci-Fi", "Thriller", "War", "Western"]
NEEDED = ["u.data", "u.item", "u.user", "u.genre", "u.occupation", "u.info"]


def from_grouplens(dest):
    with urllib.request.urlopen(URL, timeout=30) as resp:
        blob = resp.read()
    with zipfile.ZipFile(io.BytesIO(blob)) as z:
        for name in z.namelist():
            base = os.path.basename(name)
            if base and name.startswith("ml-100k/"):
                with open(os.path.join(dest, base), "wb") as out:
                    out.write(z.read(name))


def from_wheel(dest):
    import polars as pl

    with tempfile.TemporaryDirectory() as tmp:
        subprocess.check_call([sys.executable, "-m", "pip", "download", "--no-deps",
                               "-q", "-d", tmp, "pytorch-widedeep==1.7.0"])
        wheel = next(f for f in os.listdir(tmp) if f.endswith(".whl"))
        z = zipfile.ZipFile(os.path.join(tmp, wheel))
        frames = {}
        for part in ("data", "items", "users"):
            raw = z.read(f"pytorch_widedeep/datasets/data/MovieLens100k_{part}.parquet.brotli")
            frames[part] = pl.read_parquet(io.BytesIO(raw))

    def s(v):
        return "" if v is None else str(v)

    data = frames["data"]
    with open(os.path.join(dest, "u.data"), "w") as f:
        for u, i, r, t in data.select(["user_id", "movie_id", "rating", "timestamp"]).iter_rows():
            f.write(f"{u}\t{i}\t{r}\t{t}\n")

    items = frames["items"]
    with open(os.path.join(dest, "u.item"), "w", encoding="utf-8") as f:
        for row in items.iter_rows(named=True):
            video = row["video_release_date"]
            fields = [str(row["movie_id"]), s(row["movie_title"]), s(row["release_date"]),
                      "" if video is None or video != video else s(video), s(row["IMDb_URL"])]
            fields += [str(int(row[g])) for g in GENRES]
            f.write("|".join(fields) + "\n")

    users = frames["users"]
    with open(os.path.join(dest, "u.user"), "w") as f:
        for row in users.iter_rows(named=True):
            f.write("|".join([str(row["user_id"]), str(row["age"]), s(row["gender"]),
                              s(row["occupation"]), s(row["zip_code"])]) + "\n")

    with open(os.path.join(dest, "u.genre"), "w") as f:
        for idx, g in enumerate(GENRES):
            f.write(f"{g}|{idx}\n")
        f.write("\n")

    with open(os.path.join(dest, "u.occupation"), "w") as f:
        for occ in sorted(set(users["occupation"].to_list())):
            f.write(occ + "\n")

    with open(os.path.join(dest, "u.info"), "w") as f:
        f.write(f"{users.height} users\n{items.height} items\n{data.height} ratings\n")


def main():
    dest = sys.argv[1] if len(sys.argv) > 1 else os.path.join("data", "ml-100k")
    os.makedirs(dest, exist_ok=True)
    if all(os.path.exists(os.path.join(dest, n)) for n in NEEDED):
        print(f"{dest}: already present")
        return
    try:
        from_grouplens(dest)
        print(f"{dest}: extracted from {URL}")
    except Exception as err:  # noqa: BLE001
        print(f"grouplens unreachable ({err}); rebuilding from pytorch-widedeep wheel", file=sys.stderr)
        from_wheel(dest)
        print(f"{dest}: rebuilt from wheel")


if __name__ == "__main__":
    main()
