/** Keyboard-first workflow: every per-item decision is a single keystroke. */

import type { Strategy } from "./types";

export type Intent =
  | { kind: "confirm_crystal" }
  | { kind: "confirm_noncrystal" }
  | { kind: "open_picker" }
  | { kind: "close_picker" }
  | { kind: "pick_label"; labelId: number }
  | { kind: "next" }
  | { kind: "prev" }
  | { kind: "set_strategy"; strategy: Strategy }
  | { kind: "toggle_zoom" };

/** Map a KeyboardEvent.key to an intent; null = not a shortcut.
 * With the relabel picker open only digits and Escape are live, so a stray
 * key can never annotate.
 */
export function intentFor(key: string, pickerOpen: boolean): Intent | null {
  if (pickerOpen) {
    if (key >= "0" && key <= "9") {
      return { kind: "pick_label", labelId: Number(key) };
    }
    if (key === "Escape") return { kind: "close_picker" };
    return null;
  }
  switch (key) {
    case "c":
      return { kind: "confirm_crystal" };
    case "x":
      return { kind: "confirm_noncrystal" };
    case "r":
      return { kind: "open_picker" };
    case "j":
    case "ArrowDown":
      return { kind: "next" };
    case "k":
    case "ArrowUp":
      return { kind: "prev" };
    case "z":
      return { kind: "toggle_zoom" };
    case "1":
      return { kind: "set_strategy", strategy: "top1" };
    case "2":
      return { kind: "set_strategy", strategy: "top2" };
    case "3":
      return { kind: "set_strategy", strategy: "top3" };
    default:
      return null;
  }
}

export const SHORTCUT_LEGEND: readonly { keys: string; does: string }[] = [
  { keys: "c", does: "confirm crystal" },
  { keys: "x", does: "confirm non-crystal" },
  { keys: "r then 0-9", does: "relabel" },
  { keys: "j / k", does: "next / previous" },
  { keys: "1 / 2 / 3", does: "queue strategy top-1/2/3" },
  { keys: "z", does: "zoom image" },
  { keys: "Esc", does: "close relabel picker" },
];
