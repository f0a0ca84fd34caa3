/** The ten-class label taxonomy, ids alphabetical over the names. */

export interface ClassLabel {
  readonly id: number;
  readonly name: string;
  readonly isCrystal: boolean;
}

export const LABELS: readonly ClassLabel[] = [
  { id: 0, name: "bad_drop", isCrystal: false },
  { id: 1, name: "clear", isCrystal: false },
  { id: 2, name: "heavy_precipitate", isCrystal: false },
  { id: 3, name: "large_crystals", isCrystal: true },
  { id: 4, name: "light_precipitate", isCrystal: false },
  { id: 5, name: "medium_crystals", isCrystal: true },
  { id: 6, name: "micro_crystals", isCrystal: true },
  { id: 7, name: "needles_plates", isCrystal: true },
  { id: 8, name: "phase_separation", isCrystal: false },
  { id: 9, name: "small_crystals", isCrystal: true },
];

export const CRYSTAL_IDS: ReadonlySet<number> = new Set(
  LABELS.filter((l) => l.isCrystal).map((l) => l.id),
);

export function labelById(id: number): ClassLabel {
  const label = LABELS[id];
  if (!label) throw new Error(`unknown label id ${id}`);
  return label;
}

export function labelByName(name: string): ClassLabel {
  const label = LABELS.find((l) => l.name === name);
  if (!label) throw new Error(`unknown label name ${name}`);
  return label;
}

/** Pretty form for display: "needles_plates" -> "needles plates". */
export function displayName(name: string): string {
  return name.replace(/_/g, " ");
}
