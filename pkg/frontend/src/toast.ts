// Transient notifications fed by the event stream.

export class Toaster {
  private readonly container: HTMLElement;

  constructor(doc: Document, parent: HTMLElement) {
    this.container = doc.createElement("div");
    this.container.className = "toasts";
    parent.appendChild(this.container);
  }

  show(text: string, ttlMs = 6000): HTMLElement {
    const doc = this.container.ownerDocument;
    const toast = doc.createElement("div");
    toast.className = "toast";
    toast.textContent = text;
    this.container.appendChild(toast);
    setTimeout(() => toast.remove(), ttlMs);
    return toast;
  }

  get count(): number {
    return this.container.children.length;
  }

  texts(): string[] {
    return Array.from(this.container.children, (c) => c.textContent ?? "");
  }
}
