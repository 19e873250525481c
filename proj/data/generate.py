#!/usr/bin/env python3
"""Regenerates the bundled synthetic datasets. Output is deterministic."""

import csv
import datetime
import json
import math
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_json(path, doc):
    path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n")


def fmt(v, digits=4):
    return f"{v:.{digits}f}"


def planted(rng, n=200):
    rows = []
    for _ in range(n):
        x = [rng.uniform(0.5, 2.0) for _ in range(5)]
        y = x[0] / x[1] ** 2 + rng.gauss(0.0, 0.05)
        rows.append([fmt(v) for v in x] + [fmt(y)])
    return ["x1", "x2", "x3", "x4", "x5", "y"], rows


def diabetes(rng, n=300):
    rows = []
    for _ in range(n):
        preg = min(int(rng.expovariate(1 / 3.5)), 15)
        age = min(21 + int(rng.expovariate(1 / 12)) + preg, 81)
        glucose = rng.gauss(120, 30)
        bp = rng.gauss(70, 12)
        skin = max(rng.gauss(27, 9), 7)
        insulin = max(rng.gauss(100, 60), 15)
        bmi = max(rng.gauss(32, 7), 18)
        pedigree = rng.lognormvariate(-0.9, 0.6)
        z = 0.035 * (glucose - 120) + 0.09 * (bmi - 32) + 0.03 * (age - 33) + 0.8 * (pedigree - 0.45) - 0.6
        outcome = rng.random() < 1 / (1 + math.exp(-z))
        row = [str(preg), fmt(glucose, 0), fmt(bp, 0), fmt(skin, 0), fmt(insulin, 0), fmt(bmi, 1), fmt(pedigree, 3),
               str(age), "1" if outcome else "0"]
        # Sparse missing cells in the clinical measurements.
        for col in (3, 4):
            if rng.random() < 0.05:
                row[col] = ""
        rows.append(row)
    header = ["Pregnancies", "Glucose", "BloodPressure", "SkinThickness", "Insulin", "BMI",
              "DiabetesPedigreeFunction", "Age", "Outcome"]
    return header, rows


def retail(rng, n=240):
    stores = ["north", "south", "east", "west"]
    base = {"north": 1.0, "south": 1.3, "east": 0.8, "west": 1.1}
    start = datetime.date(2023, 1, 2)
    rows = []
    for i in range(n):
        day = start + datetime.timedelta(days=i // len(stores))
        store = stores[i % len(stores)]
        season = math.sin(2 * math.pi * day.timetuple().tm_yday / 365)
        t_min = 8 + 10 * season + rng.gauss(0, 2)
        t_max = t_min + rng.uniform(4, 10)
        price = rng.uniform(2.0, 6.0)
        weekend = day.weekday() >= 5
        demand = base[store] * (60 + 2.5 * t_max + (25 if weekend else 0) - 6 * price) + rng.gauss(0, 5)
        stock = demand + rng.uniform(10, 60)
        revenue = price * max(demand, 0)
        rows.append([day.isoformat(), store, fmt(stock, 0), fmt(price, 2), fmt(t_min, 1), fmt(t_max, 1), fmt(revenue, 2)])
    return ["date", "store", "stock", "price", "temp_min", "temp_max", "revenue"], rows


def main():
    rng = random.Random(20240601)

    header, rows = planted(rng)
    d = HERE / "planted"
    d.mkdir(exist_ok=True)
    write_csv(d / "planted.csv", header, rows)
    write_json(d / "schema.json", {"target": "y", "task": "regression", "concept_map": "mapping.json"})
    write_json(d / "mapping.json", {
        "x1": {"class": "Weight", "unit": "kg"},
        "x2": {"class": "Height", "unit": "m"},
        "x3": {"class": "Temperature", "unit": "°C"},
        "x4": {"class": "Price", "unit": "USD"},
        "x5": {"class": "Duration", "unit": "s"},
    })
    write_json(d / "mapping_empty.json", {})
    write_json(d / "manifest.json", {
        "dataset": "planted.csv", "schema": "schema.json", "kg": "../default_kg.json",
        "mapping": "mapping.json", "out": "out", "config": {"seed": 0}})
    write_json(d / "manifest_unmapped.json", {
        "dataset": "planted.csv", "schema": "schema.json", "kg": "../default_kg.json",
        "mapping": "mapping_empty.json", "out": "out_unmapped", "config": {"seed": 0}})

    header, rows = diabetes(rng)
    d = HERE / "diabetes-mini"
    d.mkdir(exist_ok=True)
    write_csv(d / "diabetes.csv", header, rows)
    write_json(d / "schema.json", {"target": "Outcome", "task": "classification", "concept_map": "mapping.json"})
    write_json(d / "mapping.json", {
        "Pregnancies": {"class": "Pregnancies", "unit": "count"},
        "Glucose": {"class": "GlucoseConcentration", "unit": "mg/dL"},
        "BloodPressure": {"class": "BloodPressure", "unit": "mmHg"},
        "SkinThickness": {"class": "SkinThickness", "unit": "mm"},
        "Insulin": {"class": "InsulinConcentration", "unit": "µU/mL"},
        "BMI": {"class": "BodyMassIndex", "unit": "kg/m²"},
        "DiabetesPedigreeFunction": {"class": "PedigreeScore", "unit": "ratio"},
        "Age": {"class": "Age", "unit": "year"},
    })
    write_json(d / "manifest.json", {
        "dataset": "diabetes.csv", "schema": "schema.json", "kg": "../default_kg.json",
        "out": "out", "config": {"seed": 0}})

    header, rows = retail(rng)
    d = HERE / "retail-mini"
    d.mkdir(exist_ok=True)
    write_csv(d / "retail.csv", header, rows)
    write_json(d / "schema.json", {"target": "revenue", "task": "regression", "concept_map": "mapping.json"})
    write_json(d / "mapping.json", {
        "date": {"class": "CalendarDate", "unit": None},
        "store": {"class": "Store", "unit": None},
        "stock": {"class": "Stock", "unit": "count"},
        "price": {"class": "UnitPrice", "unit": "USD/item"},
        "temp_min": {"class": "Temperature", "unit": "°C"},
        "temp_max": {"class": "Temperature", "unit": "°C"},
    })
    write_json(d / "manifest.json", {
        "dataset": "retail.csv", "schema": "schema.json", "kg": "../default_kg.json",
        "out": "out", "config": {"seed": 0}})


if __name__ == "__main__":
    main()
