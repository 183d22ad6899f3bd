/** Per-panel request sequencing. Each submit takes a token; by the time a
 * response lands, the token is only honored if no newer submit happened.
 * That keeps one logical request in flight per panel: superseded replies
 * are discarded instead of racing the newest one onto the screen. */
export class PanelGate {
  private seq = 0;

  begin(): number {
    return ++this.seq;
  }

  isCurrent(token: number): boolean {
    return token === this.seq;
  }
}
